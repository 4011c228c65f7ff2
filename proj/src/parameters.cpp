#include "flexlmm/parameters.hpp"

#include "flexlmm/error.hpp"

#include <charconv>

namespace flexlmm {

SlotName parse_slot(const std::string& name)
{
  const auto open = name.find('[');
  if (open == std::string::npos)
    return {name, std::nullopt};
  if (name.back() != ']' || open + 2 > name.size() - 1)
    fail(ErrorCode::ParameterAbsent, "malformed parameter name '" + name + "'");
  std::size_t idx = 0;
  const char* first = name.data() + open + 1;
  const char* last = name.data() + name.size() - 1;
  auto [ptr, ec] = std::from_chars(first, last, idx);
  if (ec != std::errc() || ptr != last)
    fail(ErrorCode::ParameterAbsent, "malformed parameter index in '" + name + "'");
  return {name.substr(0, open), idx};
}

std::string slot_name(const std::string& base, std::optional<std::size_t> index)
{
  return index ? base + "[" + std::to_string(*index) + "]" : base;
}

namespace {

double* locate(ParameterVector& p, const std::string& name)
{
  const SlotName s = parse_slot(name);
  auto indexed = [&](Eigen::VectorXd& v) -> double* {
    if (s.index && *s.index < std::size_t(v.size()))
      return &v[Eigen::Index(*s.index)];
    return nullptr;
  };
  auto marginal = [&]() -> MarginalParams* {
    if (s.index && *s.index < p.theta_u.marginals.size())
      return &p.theta_u.marginals[*s.index];
    return nullptr;
  };
  if (s.base == "beta")
    return indexed(p.beta);
  if (s.base == "u")
    return indexed(p.u);
  if (s.index) {
    MarginalParams* m = marginal();
    if (!m)
      return nullptr;
    if (s.base == "mu") return &m->mu;
    if (s.base == "sigma") return &m->sigma;
    if (s.base == "gamma") return &m->gamma;
    if (s.base == "delta") return &m->delta;
    return nullptr;
  }
  if (s.base == "sigma_eps")
    return &p.sigma_eps;
  if (s.base == "delta_eps")
    return p.delta_eps ? &*p.delta_eps : nullptr;
  if (s.base == "gamma_eps")
    return p.gamma_eps ? &*p.gamma_eps : nullptr;
  if (s.base == "rho")
    return &p.theta_u.rho;
  return nullptr;
}

} // namespace

double get_slot(const ParameterVector& params, const std::string& name)
{
  double* v = locate(const_cast<ParameterVector&>(params), name);
  if (!v)
    fail(ErrorCode::ParameterAbsent, "no parameter named '" + name + "'");
  return *v;
}

void set_slot(ParameterVector& params, const std::string& name, double value)
{
  double* v = locate(params, name);
  if (!v)
    fail(ErrorCode::ParameterAbsent, "no parameter named '" + name + "'");
  *v = value;
}

} // namespace flexlmm
