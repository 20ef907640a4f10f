#include "motionnet/optimizer.hpp"

#include <cmath>

#include "motionnet/errors.hpp"

namespace motionnet {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("adam: lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("adam: beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam: beta2 must be in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("adam: eps must be positive");
}

Adam::Adam(std::vector<std::pair<std::string, TensorPtr>> params, AdamConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  if (params.empty()) throw ConfigError("adam: no parameters to optimize");
  slots_.reserve(params.size());
  for (auto& [name, p] : params) {
    Slot s;
    s.name = name;
    s.param = p;
    s.m.assign(static_cast<size_t>(p->numel()), 0.0);
    s.v.assign(static_cast<size_t>(p->numel()), 0.0);
    slots_.push_back(std::move(s));
  }
}

void Adam::step() {
  pow1_ *= cfg_.beta1;
  pow2_ *= cfg_.beta2;
  ++steps_;
  const double corr1 = 1.0 - pow1_;
  const double corr2 = 1.0 - pow2_;
  for (Slot& s : slots_) {
    Tensor& p = *s.param;
    p.ensure_grad();
    const size_t n = p.data.size();
    for (size_t i = 0; i < n; ++i) {
      const double g = p.grad[i];
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = s.m[i] / corr1;
      const double vhat = s.v[i] / corr2;
      p.data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
    p.zero_grad();
  }
}

void Adam::export_state(NamedTensors& out) const {
  for (const Slot& s : slots_) {
    out.emplace_back("opt.m." + s.name,
                     Tensor::from({static_cast<int64_t>(s.m.size())}, s.m));
    out.emplace_back("opt.v." + s.name,
                     Tensor::from({static_cast<int64_t>(s.v.size())}, s.v));
  }
  out.emplace_back("opt.powers",
                   Tensor::from({3}, {pow1_, pow2_, static_cast<double>(steps_)}));
}

void Adam::import_state(const NamedTensors& in) {
  for (Slot& s : slots_) {
    const Tensor* m = find_tensor(in, "opt.m." + s.name);
    const Tensor* v = find_tensor(in, "opt.v." + s.name);
    if (m == nullptr || v == nullptr) {
      throw ParseError("adam: checkpoint is missing optimizer state for \"" + s.name + "\"");
    }
    if (m->numel() != static_cast<int64_t>(s.m.size()) ||
        v->numel() != static_cast<int64_t>(s.v.size())) {
      throw ParseError("adam: optimizer state for \"" + s.name + "\" has wrong size");
    }
    s.m = m->data;
    s.v = v->data;
  }
  const Tensor* powers = find_tensor(in, "opt.powers");
  if (powers == nullptr || powers->numel() != 3) {
    throw ParseError("adam: checkpoint is missing opt.powers");
  }
  pow1_ = powers->data[0];
  pow2_ = powers->data[1];
  steps_ = static_cast<int64_t>(powers->data[2]);
}

}  // namespace motionnet
