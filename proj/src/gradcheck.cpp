#include "sbelkit/gradcheck.hpp"

#include <cmath>
#include <random>

namespace sbelkit::model {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradcheckReport gradcheck(const GradcheckOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  JointModel model{init_params(opt.shape, opt.seed), opt.weights, opt.mask_function_loss_on_negative};
  // Move biases and gains off their initial values so every path carries signal.
  for (auto& t : model.params.tensors())
    for (auto& v : t.tensor->data) v += 0.2 * (unit() - 0.5);

  std::vector<std::vector<TokenId>> ids(opt.batch);
  std::vector<EncodedTriple> enc(opt.batch);
  std::vector<Example> batch(opt.batch);
  for (std::size_t i = 0; i < opt.batch; ++i) {
    for (std::size_t j = 0; j < opt.seq_len; ++j)
      ids[i].push_back(static_cast<TokenId>(rng() % opt.shape.vocab_size));
    for (auto* v : {&enc[i].cls, &enc[i].f1, &enc[i].f2})
      for (std::size_t j = 0; j < opt.shape.dim; ++j) v->push_back(2.0 * unit() - 1.0);
    batch[i].ids = ids[i];
    if (opt.heads_only) batch[i].encoded = &enc[i];
    batch[i].labels = {sbel::kAllRelations[rng() % kNumRelations], sbel::kAllFunctions[rng() % kNumFunctions],
                       sbel::kAllFunctions[rng() % kNumFunctions]};
  }

  Params grads = Params::zeros(opt.shape);
  GradcheckReport report;
  report.loss = batch_gradient(model, batch, opt.terms, grads);

  auto loss_at = [&] {
    double j = 0.0;
    for (const auto& ex : batch) j += example_loss(model, ex, opt.terms);
    return j;
  };

  auto params = opt.heads_only ? model.params.head_tensors() : model.params.tensors();
  auto analytic = opt.heads_only ? grads.head_tensors() : grads.tensors();
  if (opt.corrupt_gradient) {
    auto& g = analytic.front().tensor->data.front();
    g += 1e-3 * (1.0 + std::abs(g));
  }

  for (std::size_t t = 0; t < params.size(); ++t) {
    TensorCheck tc{params[t].name, params[t].tensor->data.size(), 0.0};
    auto& p = params[t].tensor->data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + opt.step;
      const double up = loss_at();
      p[i] = saved - opt.step;
      const double down = loss_at();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * opt.step);
      tc.max_rel_error =
          std::max(tc.max_rel_error, relative_error(analytic[t].tensor->data[i], numeric, opt.floor));
    }
    if (tc.max_rel_error >= report.max_rel_error) {
      report.max_rel_error = tc.max_rel_error;
      report.worst_tensor = tc.name;
    }
    report.tensors.push_back(std::move(tc));
  }
  report.passed = report.max_rel_error < opt.tolerance;
  return report;
}

}  // namespace sbelkit::model
