#include "splatprep/quality_metrics.hpp"

#include <cmath>

#include "splatprep/error.hpp"

namespace splatprep {

ImagePair::ImagePair(const Image& observed, const Image& rendered) : observed_(&observed), rendered_(&rendered) {
  if (observed.width() != rendered.width() || observed.height() != rendered.height() ||
      observed.channels() != rendered.channels())
    throw UsageError("image pair differs in width, height or channel count");
  if (observed.empty()) throw UsageError("image pair is empty");
}

void validate(const SsimParams& p) {
  if (p.window < 3 || p.window % 2 == 0) throw UsageError("SSIM window must be odd and >= 3");
  if (!(p.sigma > 0.0)) throw UsageError("SSIM sigma must be positive");
  if (!(p.c1() > 0.0 && p.c2() > 0.0)) throw UsageError("SSIM constants must be positive");
}

kernels::SsimWindow make_ssim_window(const SsimParams& p) {
  validate(p);
  kernels::SsimWindow w;
  w.size = p.window;
  w.weights.resize(p.window);
  const int half = p.window / 2;
  double sum = 0.0;
  for (int i = 0; i < p.window; ++i) {
    const double d = i - half;
    sum += w.weights[i] = std::exp(-(d * d) / (2.0 * p.sigma * p.sigma));
  }
  for (double& v : w.weights) v /= sum;
  w.c1 = p.c1();
  w.c2 = p.c2();
  return w;
}

double l1_loss(const ImagePair& pair) {
  auto a = pair.observed().data();
  auto b = pair.rendered().data();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += static_cast<std::uint64_t>(std::abs(int{a[i]} - int{b[i]}));
  return static_cast<double>(sum) / 255.0 / static_cast<double>(a.size());
}

double ssim(const ImagePair& pair, const SsimParams& params) {
  const auto window = make_ssim_window(params);
  const Image& x = pair.observed();
  if (x.width() < params.window || x.height() < params.window)
    throw UsageError("image is smaller than the SSIM window");
  double total = 0.0;
  for (int c = 0; c < x.channels(); ++c) total += kernels::omp::ssim_mean(x, pair.rendered(), c, window);
  return total / x.channels();
}

double combined_loss(const ImagePair& pair, double lambda, const SsimParams& params) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  const double l1 = l1_loss(pair);
  if (lambda == 0.0) return l1;
  return (1.0 - lambda) * l1 + lambda * (1.0 - ssim(pair, params));
}

double mse(const ImagePair& pair) {
  auto a = pair.observed().data();
  auto b = pair.rendered().data();
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t d = int{a[i]} - int{b[i]};
    sum += static_cast<std::uint64_t>(d * d);
  }
  return static_cast<double>(sum) / static_cast<double>(a.size());
}

double psnr(const ImagePair& pair) {
  const double e = mse(pair);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / e);
}

}  // namespace splatprep
