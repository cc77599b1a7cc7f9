#include "sdobs/grid.hpp"

#include <cmath>
#include <string>

#include "sdobs/errors.hpp"

namespace sdobs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnsupportedAnalyticCase: return "UnsupportedAnalyticCase";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::InvalidM: return "InvalidM";
    case ErrorCode::NonPositiveCoefficient: return "NonPositiveCoefficient";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotHurwitz: return "NotHurwitz";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::PlacementImpossible: return "PlacementImpossible";
    case ErrorCode::KappaOutOfRange: return "KappaOutOfRange";
    case ErrorCode::QInfeasible: return "QInfeasible";
    case ErrorCode::InfeasibleAtZero: return "InfeasibleAtZero";
    case ErrorCode::NoFeasibleQ: return "NoFeasibleQ";
    case ErrorCode::StepRejected: return "StepRejected";
    case ErrorCode::ScheduleHorizonMismatch: return "ScheduleHorizonMismatch";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::DecayedToFloor: return "DecayedToFloor";
    case ErrorCode::InfeasibleReport: return "InfeasibleReport";
    case ErrorCode::TailTooShort: return "TailTooShort";
    case ErrorCode::ReactionOutOfRange: return "ReactionOutOfRange";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Grid::Grid(std::size_t nodes) : nodes_(nodes) {
  if (nodes < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 nodes");
  dx_ = 1.0 / static_cast<double>(nodes - 1);
  weights_ = Vec::Constant(static_cast<Eigen::Index>(nodes), dx_);
  weights_(0) *= 0.5;
  weights_(weights_.size() - 1) *= 0.5;
}

Vec Grid::points() const {
  Vec x(static_cast<Eigen::Index>(nodes_));
  for (std::size_t k = 0; k < nodes_; ++k) x(static_cast<Eigen::Index>(k)) = this->x(k);
  return x;
}

namespace {
void check_size(const Grid& grid, const Vec& a) {
  if (static_cast<std::size_t>(a.size()) != grid.nodes())
    throw Error(ErrorCode::GridMismatch, "vector of size " + std::to_string(a.size()) +
                                             " on a grid of " + std::to_string(grid.nodes()));
}
}  // namespace

double inner(const Grid& grid, const Vec& a, const Vec& b) {
  check_size(grid, a);
  check_size(grid, b);
  return (grid.weights().array() * a.array() * b.array()).sum();
}

double l2_norm(const Grid& grid, const Vec& a) { return std::sqrt(inner(grid, a, a)); }

double sup_norm(const Vec& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

Vec cumulative_integral(const Grid& grid, const Vec& f) {
  check_size(grid, f);
  Vec F(f.size());
  F(0) = 0.0;
  for (Eigen::Index k = 1; k < f.size(); ++k) F(k) = F(k - 1) + 0.5 * grid.dx() * (f(k - 1) + f(k));
  return F;
}

Vec restrict_to(const Grid& target, const Vec& samples) {
  const auto from = static_cast<std::size_t>(samples.size());
  if (from == target.nodes()) return samples;
  if (from < target.nodes() || (from - 1) % (target.nodes() - 1) != 0)
    throw Error(ErrorCode::GridMismatch, std::to_string(from) + " samples do not restrict to " +
                                             std::to_string(target.nodes()) + " nodes");
  const std::size_t stride = (from - 1) / (target.nodes() - 1);
  Vec out(static_cast<Eigen::Index>(target.nodes()));
  for (std::size_t k = 0; k < target.nodes(); ++k)
    out(static_cast<Eigen::Index>(k)) = samples(static_cast<Eigen::Index>(k * stride));
  return out;
}

}  // namespace sdobs
