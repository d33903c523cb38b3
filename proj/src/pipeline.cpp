#include "flare/pipeline.hpp"

#include <algorithm>

#include "flare/error.hpp"

namespace flare::pipeline {

HighResResult remove_flare_highres_detailed(const LinearImage& input, Predictor& predictor,
                                            const HighResOptions& opts) {
  if (input.channels() != 3) throw ParameterError("remove_flare_highres: input must be RGB");
  if (opts.lowres == 0 || input.width() < opts.lowres || input.height() < opts.lowres) {
    throw ParameterError("remove_flare_highres: input must be at least " + std::to_string(opts.lowres) +
                         " px on both axes");
  }
  HighResResult r;
  const LinearImage low = bilinear_resample(input, opts.lowres, opts.lowres);
  const LinearImage pred = predict(predictor, low);

  r.flare_low = low;
  auto fl = r.flare_low.samples();
  auto pp = pred.samples();
  for (std::size_t i = 0; i < fl.size(); ++i) fl[i] -= pp[i];

  const LinearImage flare_hi = bilinear_resample(r.flare_low, input.width(), input.height());
  r.unblended = input;
  auto un = r.unblended.samples();
  auto fh = flare_hi.samples();
  for (std::size_t i = 0; i < un.size(); ++i) un[i] = std::clamp(un[i] - fh[i], 0.0f, 1.0f);

  r.feathered = maskblend::feathered_saturation(input, opts.threshold, opts.measure);
  r.output = maskblend::blend_light_source(input, r.unblended, r.feathered);
  return r;
}

LinearImage remove_flare_highres(const LinearImage& input, Predictor& predictor, const HighResOptions& opts) {
  return remove_flare_highres_detailed(input, predictor, opts).output;
}

}  // namespace flare::pipeline
