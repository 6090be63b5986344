#include <algorithm>
#include <cmath>
#include <queue>

#include <Eigen/Eigenvalues>

#include "ptrap/errors.hpp"
#include "ptrap/pseudopotential.hpp"

namespace ptrap {

DepthResult find_trap_depth(const EnergyModel& model, const Vec3& minimum, double min_energy,
                            const DepthOptions& options) {
  if (!(options.spacing > 0.0) || !(options.half_width > 0.0) || !(options.z_low > 0.0) ||
      !(options.z_high > options.z_low)) {
    throw TrapError(ErrorCode::InvalidParams, "invalid depth search options");
  }
  const double h = minimum.z();
  const Vec3 lo(minimum.x() - options.half_width * h, minimum.y() - options.half_width * h, options.z_low * h);
  const Vec3 hi(minimum.x() + options.half_width * h, minimum.y() + options.half_width * h, options.z_high * h);
  int n[3];
  Vec3 step;
  for (int a = 0; a < 3; ++a) {
    n[a] = std::max(3, static_cast<int>(std::lround((hi[a] - lo[a]) / options.spacing)) + 1);
    step[a] = (hi[a] - lo[a]) / (n[a] - 1);
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  auto index = [&](int i, int j, int k) { return (static_cast<std::size_t>(i) * n[1] + j) * n[2] + k; };
  auto node = [&](std::size_t id, int& i, int& j, int& k) {
    k = static_cast<int>(id % n[2]);
    j = static_cast<int>((id / n[2]) % n[1]);
    i = static_cast<int>(id / (static_cast<std::size_t>(n[1]) * n[2]));
  };
  auto position = [&](std::size_t id) {
    int i, j, k;
    node(id, i, j, k);
    return Vec3(lo.x() + i * step.x(), lo.y() + j * step.y(), lo.z() + k * step.z());
  };
  auto on_boundary = [&](std::size_t id) {
    int i, j, k;
    node(id, i, j, k);
    return i == 0 || j == 0 || k == 0 || i == n[0] - 1 || j == n[1] - 1 || k == n[2] - 1;
  };

  // Energies are filled brick by brick as the flood reaches them; the well
  // usually occupies a small part of the box.
  constexpr int kBrick = 8;
  int nb[3];
  for (int a = 0; a < 3; ++a) nb[a] = (n[a] + kBrick - 1) / kBrick;
  std::vector<double> energy(total, 0.0);
  std::vector<char> brick_done(static_cast<std::size_t>(nb[0]) * nb[1] * nb[2], 0);
  auto energy_at = [&](std::size_t id) {
    int i, j, k;
    node(id, i, j, k);
    const int bi = i / kBrick, bj = j / kBrick, bk = k / kBrick;
    const std::size_t b = (static_cast<std::size_t>(bi) * nb[1] + bj) * nb[2] + bk;
    if (!brick_done[b]) {
      std::vector<std::size_t> ids;
      std::vector<Vec3> pts;
      for (int a = bi * kBrick; a < std::min(n[0], (bi + 1) * kBrick); ++a)
        for (int c = bj * kBrick; c < std::min(n[1], (bj + 1) * kBrick); ++c)
          for (int e = bk * kBrick; e < std::min(n[2], (bk + 1) * kBrick); ++e) {
            ids.push_back(index(a, c, e));
            pts.push_back(position(ids.back()));
          }
      const std::vector<double> values = model.total_many(pts);
      for (std::size_t t = 0; t < ids.size(); ++t) energy[ids[t]] = values[t];
      brick_done[b] = 1;
    }
    return energy[id];
  };

  std::size_t start = 0;
  {
    int i = static_cast<int>(std::lround((minimum.x() - lo.x()) / step.x()));
    int j = static_cast<int>(std::lround((minimum.y() - lo.y()) / step.y()));
    int k = static_cast<int>(std::lround((minimum.z() - lo.z()) / step.z()));
    start = index(std::clamp(i, 0, n[0] - 1), std::clamp(j, 0, n[1] - 1), std::clamp(k, 0, n[2] - 1));
  }

  // Minimax flood: each node's level is the lowest possible maximum energy
  // along a path from the start; the first boundary node popped sets the
  // escape level, and the node that raised it is the barrier.
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  std::vector<char> seen(total, 0);
  std::vector<std::size_t> barrier(total);
  heap.emplace(energy_at(start), start);
  seen[start] = 1;
  barrier[start] = start;
  std::size_t exit_node = start;
  while (!heap.empty()) {
    const auto [level, id] = heap.top();
    heap.pop();
    if (on_boundary(id)) {
      exit_node = id;
      break;
    }
    int i, j, k;
    node(id, i, j, k);
    const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (const auto& o : d) {
      const std::size_t next = index(i + o[0], j + o[1], k + o[2]);
      if (seen[next]) continue;
      seen[next] = 1;
      const double e = energy_at(next);
      if (e > level) {
        barrier[next] = next;
        heap.emplace(e, next);
      } else {
        barrier[next] = barrier[id];
        heap.emplace(level, next);
      }
    }
  }

  DepthResult out;
  const std::size_t saddle = barrier[exit_node];
  Vec3 p = position(saddle);
  out.escape_point = p;
  out.lower_bound = on_boundary(saddle);
  double barrier_energy = energy[saddle];
  try {
    barrier_energy = model.total(p, 0).value;
  } catch (const TrapError&) {
  }

  if (options.refine_saddle && !out.lower_bound) {
    try {
      Vec3 q = p;
      EnergyJet j = model.total(q, 2);
      for (int it = 0; it < 40 && j.grad.norm() > 1e-10; ++it) {
        const Vec3 s = -j.hess.fullPivLu().solve(j.grad);
        if (!s.allFinite()) break;
        q += s;
        j = model.total(q, 2);
        if (s.norm() < 1e-9) break;
      }
      Eigen::SelfAdjointEigenSolver<Mat3> es(j.hess);
      const int negative = static_cast<int>((es.eigenvalues().array() < 0.0).count());
      const bool near = ((q - p).cwiseAbs().array() <= 2.0 * step.array()).all();
      if (near && negative == 1 && j.grad.norm() < 1e-6 && j.value >= min_energy) {
        out.escape_point = q;
        barrier_energy = j.value;
      }
    } catch (const TrapError&) {
    }
  }
  out.depth = std::max(0.0, barrier_energy - min_energy);
  return out;
}

}  // namespace ptrap
