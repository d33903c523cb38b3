// Reference predictor for the frame protocol: answers every request with the
// request image (or, with --clip, the image clipped to [0, 1]).

#include <unistd.h>

#include <cstring>
#include <iostream>

#include "flare/predictor.hpp"

int main(int argc, char** argv) {
  const bool clip = argc > 1 && std::strcmp(argv[1], "--clip") == 0;
  const std::size_t errors = flare::pipeline::serve_frames(
      STDIN_FILENO, STDOUT_FILENO,
      [clip](const flare::LinearImage& img) { return clip ? flare::clip(img) : img; });
  if (errors > 0) std::cerr << "{\"level\":\"warn\",\"event\":\"errors\",\"count\":" << errors << "}\n";
  return 0;
}
