#include "flare/cli.hpp"

int main(int argc, char** argv) { return flare::cli::dispatch(argc, argv); }
