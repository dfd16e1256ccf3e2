#include "misr4d/losses.hpp"

#include <cmath>

namespace misr4d {

void LossConfig::validate() const {
  if (lambda < 0) throw config_error("loss: lambda must be >= 0");
  if (step_threshold <= 0) throw config_error("loss: step_threshold must be > 0");
  if (msssim_weights.empty()) throw config_error("loss: need at least one ms-ssim scale");
  double s = 0;
  for (double w : msssim_weights) {
    if (w <= 0) throw config_error("loss: ms-ssim weights must be > 0");
    s += w;
  }
  if (std::abs(s - 1.0) > 1e-6) throw config_error("loss: ms-ssim weights must sum to 1");
  if (window < 3 || window % 2 == 0) throw config_error("loss: window must be odd and >= 3");
  if (window_sigma <= 0) throw config_error("loss: window_sigma must be > 0");
}

namespace {

class IdentityExtractor : public FeatureExtractor {
public:
  std::string name() const override { return "identity"; }
  Tensor<double> forward(const Tensor<double>& x) const override { return x; }
  Tensor<double> vjp(const Tensor<double>&, const Tensor<double>& dfeat) const override {
    return dfeat;
  }
};

} // namespace

std::shared_ptr<FeatureExtractor> make_extractor(const std::string& name) {
  if (name.empty() || name == "none") return nullptr;
  if (name == "identity") return std::make_shared<IdentityExtractor>();
  throw config_error("unknown perceptual extractor: " + name);
}

} // namespace misr4d
