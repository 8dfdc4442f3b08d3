#pragma once

#include <Eigen/Core>

#include <cmath>
#include <concepts>
#include <string>
#include <utility>
#include <vector>

#include "mfvi/errors.hpp"
#include "mfvi/transforms.hpp"

namespace mfvi {

/// One named parameter block and the transform that unconstrains it.
struct ParameterBlock {
  std::string name;
  Transform transform;
  Eigen::Index constrained_offset = 0;
  Eigen::Index unconstrained_offset = 0;

  /// Scalar element names: "theta" for size-1 blocks, "theta[2]" or
  /// "theta[1,2]" (for a block already named "theta[1]") otherwise. 1-based.
  std::string element_name(Eigen::Index i) const {
    if (transform.size == 1) return name;
    const std::string idx = std::to_string(i + 1);
    if (!name.empty() && name.back() == ']') return name.substr(0, name.size() - 1) + "," + idx + "]";
    return name + "[" + idx + "]";
  }
};

/// Shape descriptor of a model's parameters: an ordered list of blocks laid
/// out contiguously in a flat constrained vector and a flat unconstrained one.
class ParameterLayout {
 public:
  ParameterLayout() = default;

  ParameterLayout& add(std::string name, Transform t) {
    ParameterBlock b{std::move(name), t, constrained_size_, unconstrained_size_};
    constrained_size_ += t.size;
    unconstrained_size_ += t.unconstrained_size();
    blocks_.push_back(std::move(b));
    return *this;
  }

  const std::vector<ParameterBlock>& blocks() const noexcept { return blocks_; }
  Eigen::Index constrained_size() const noexcept { return constrained_size_; }
  Eigen::Index unconstrained_size() const noexcept { return unconstrained_size_; }

  std::vector<std::string> element_names() const {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(constrained_size_));
    for (const auto& b : blocks_)
      for (Eigen::Index i = 0; i < b.transform.size; ++i) out.push_back(b.element_name(i));
    return out;
  }

  /// Map flat unconstrained z to flat constrained x; returns total log-Jacobian.
  double constrain(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Ref<Eigen::VectorXd> x) const {
    double lj = 0.0;
    for (const auto& b : blocks_)
      lj += inverse_into(b.transform, z.segment(b.unconstrained_offset, b.transform.unconstrained_size()),
                         x.segment(b.constrained_offset, b.transform.size));
    return lj;
  }

  Eigen::VectorXd unconstrain(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != constrained_size_) throw SupportError("unconstrain: dimension mismatch");
    Eigen::VectorXd z(unconstrained_size_);
    for (const auto& b : blocks_)
      z.segment(b.unconstrained_offset, b.transform.unconstrained_size()) =
          forward(b.transform, x.segment(b.constrained_offset, b.transform.size));
    return z;
  }

  /// d/dz [f(x(z)) + log-Jacobian] given df/dx.
  void backprop(const Eigen::Ref<const Eigen::VectorXd>& z, const Eigen::Ref<const Eigen::VectorXd>& x,
                const Eigen::Ref<const Eigen::VectorXd>& grad_x, Eigen::Ref<Eigen::VectorXd> grad_z) const {
    for (const auto& b : blocks_) {
      const auto u = b.transform.unconstrained_size();
      mfvi::backprop(b.transform, z.segment(b.unconstrained_offset, u),
                     x.segment(b.constrained_offset, b.transform.size),
                     grad_x.segment(b.constrained_offset, b.transform.size),
                     grad_z.segment(b.unconstrained_offset, u));
    }
  }

  bool operator==(const ParameterLayout& o) const {
    if (blocks_.size() != o.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i)
      if (blocks_[i].name != o.blocks_[i].name || !(blocks_[i].transform == o.blocks_[i].transform))
        return false;
    return true;
  }

 private:
  std::vector<ParameterBlock> blocks_;
  Eigen::Index constrained_size_ = 0;
  Eigen::Index unconstrained_size_ = 0;
};

/// A model exposes its parameter layout and an unnormalized log joint
/// log p(y, x) over the flat constrained parameter vector, with its gradient.
template <class M>
concept Model = requires(const M& m, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  { m.layout() } -> std::convertible_to<ParameterLayout>;
  { m.log_joint(x) } -> std::convertible_to<double>;
  { m.log_joint_gradient(x, g) } -> std::convertible_to<double>;
};

/// Models that can report a prior mean (flat constrained) for initialization.
template <class M>
concept HasPriorMean = requires(const M& m) {
  { m.prior_mean() } -> std::convertible_to<Eigen::VectorXd>;
};

/// Mean-field Gaussian family over the unconstrained coordinates: one
/// independent Normal(loc_i, exp(log_scale_i)) per coordinate, pushed through
/// each block's inverse transform.
class MeanFieldPosterior {
 public:
  MeanFieldPosterior() = default;

  explicit MeanFieldPosterior(ParameterLayout layout, double log_scale = -1.0)
      : layout_(std::move(layout)),
        loc_(Eigen::VectorXd::Zero(layout_.unconstrained_size())),
        log_scale_(Eigen::VectorXd::Constant(layout_.unconstrained_size(), log_scale)) {}

  MeanFieldPosterior(ParameterLayout layout, Eigen::VectorXd loc, Eigen::VectorXd log_scale)
      : layout_(std::move(layout)), loc_(std::move(loc)), log_scale_(std::move(log_scale)) {
    if (loc_.size() != layout_.unconstrained_size() || log_scale_.size() != loc_.size())
      throw ParameterError("MeanFieldPosterior: loc/log_scale size does not match layout");
  }

  const ParameterLayout& layout() const noexcept { return layout_; }
  Eigen::Index dim() const noexcept { return loc_.size(); }

  const Eigen::VectorXd& loc() const noexcept { return loc_; }
  const Eigen::VectorXd& log_scale() const noexcept { return log_scale_; }
  Eigen::VectorXd& loc() noexcept { return loc_; }
  Eigen::VectorXd& log_scale() noexcept { return log_scale_; }

  /// lambda = [loc; log_scale], length 2 * dim().
  Eigen::VectorXd params() const {
    Eigen::VectorXd p(2 * dim());
    p << loc_, log_scale_;
    return p;
  }

  void set_params(const Eigen::Ref<const Eigen::VectorXd>& p) {
    if (p.size() != 2 * dim()) throw ParameterError("set_params: wrong length");
    loc_ = p.head(dim());
    log_scale_ = p.tail(dim());
  }

  MeanFieldPosterior with_params(const Eigen::Ref<const Eigen::VectorXd>& p) const {
    MeanFieldPosterior q = *this;
    q.set_params(p);
    return q;
  }

  struct FactorView {
    const std::string& name;
    const Transform& transform;
    Eigen::VectorXd loc;
    Eigen::VectorXd log_scale;
  };

  std::vector<FactorView> factors() const {
    std::vector<FactorView> out;
    for (const auto& b : layout_.blocks()) {
      const auto u = b.transform.unconstrained_size();
      out.push_back({b.name, b.transform, loc_.segment(b.unconstrained_offset, u),
                     log_scale_.segment(b.unconstrained_offset, u)});
    }
    return out;
  }

  /// Factor by block name; throws IndexError if absent.
  FactorView factor(const std::string& name) const {
    for (auto& f : factors())
      if (f.name == name) return f;
    throw IndexError("no factor named " + name);
  }

 private:
  ParameterLayout layout_;
  Eigen::VectorXd loc_;
  Eigen::VectorXd log_scale_;
};

/// Standard starting point: loc = unconstrained prior mean (0 where the model
/// offers none), log_scale = -1.
template <Model M>
MeanFieldPosterior initial_posterior(const M& model) {
  MeanFieldPosterior q(model.layout(), -1.0);
  if constexpr (HasPriorMean<M>) {
    const Eigen::VectorXd mean = model.prior_mean();
    Eigen::VectorXd z = q.layout().unconstrain(mean);
    for (Eigen::Index i = 0; i < z.size(); ++i)
      if (!std::isfinite(z[i])) z[i] = 0.0;
    q.loc() = z;
  }
  return q;
}

}  // namespace mfvi
