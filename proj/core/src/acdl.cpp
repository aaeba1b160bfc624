#include "asckit/acdl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "asckit/errors.hpp"
#include "asckit/rng.hpp"

namespace asckit {

int CompactDictionary::alive_count() const {
  return static_cast<int>(std::count(alive.begin(), alive.end(), true));
}

std::vector<Eigen::Index> CompactDictionary::alive_indices() const {
  std::vector<Eigen::Index> idx;
  for (std::size_t j = 0; j < alive.size(); ++j)
    if (alive[j]) idx.push_back(static_cast<Eigen::Index>(j));
  return idx;
}

int CompactDictionary::alive_count_in_class(int c) const {
  int count = 0;
  for (std::size_t j = 0; j < alive.size(); ++j)
    if (alive[j] && atom_class[j] == c) ++count;
  return count;
}

Eigen::VectorXd simplex_project(const Eigen::VectorXd& v) {
  const Eigen::Index k = v.size();
  if (k == 0) throw DimensionError("simplex_project: empty vector");
  if (!v.allFinite()) throw NumericError("simplex_project: non-finite input");

  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double css = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    css += u[static_cast<std::size_t>(j)];
    const double t = (css - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).max(0.0);
}

namespace {

// Shared per-(A, W) precomputation for coding many columns: the quadratic
// term and its largest eigenvalue, which fixes the safe gradient step.
class SparseCoder {
 public:
  SparseCoder(const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& weights, double gamma,
              int max_iters, double tolerance)
      : atoms_(atoms),
        weights_(weights),
        gamma_(gamma),
        max_iters_(max_iters),
        tolerance_(tolerance) {
    const Eigen::Index k = atoms.cols();
    quad_ = atoms.transpose() * atoms;
    if (gamma_ > 0.0 && weights_.size() > 0) quad_ += gamma_ * weights.transpose() * weights;
    double lmax = 0.0;
    if (k > 0) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(quad_, Eigen::EigenvaluesOnly);
      lmax = es.eigenvalues().maxCoeff();
    }
    step_ = 1.0 / std::max(lmax, 1e-12);
  }

  Eigen::VectorXd linear_term(const Eigen::VectorXd& y, const Eigen::VectorXd& g) const {
    Eigen::VectorXd b = atoms_.transpose() * y;
    if (gamma_ > 0.0 && weights_.size() > 0) b.noalias() += gamma_ * weights_.transpose() * g;
    return b;
  }

  // objective up to the constant ||y||^2 + gamma ||g||^2
  double partial_objective(const Eigen::VectorXd& z, const Eigen::VectorXd& b) const {
    return z.dot(quad_ * z) - 2.0 * b.dot(z);
  }

  Eigen::VectorXd code(const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                       const Eigen::VectorXd* warm_start) const {
    const Eigen::Index k = atoms_.cols();
    if (k == 0) throw DimensionError("sparse_code: no atoms");
    if (!y.allFinite() || !g.allFinite()) throw NumericError("sparse_code: non-finite input");
    if (atoms_.rows() != y.size()) throw DimensionError("sparse_code: atom/input length mismatch");
    if (k == 1) return Eigen::VectorXd::Ones(1);

    Eigen::VectorXd z = warm_start && warm_start->size() == k
                            ? simplex_project(*warm_start)
                            : Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));
    const Eigen::VectorXd b = linear_term(y, g);
    double obj = partial_objective(z, b);
    double step = step_;
    for (int it = 0; it < max_iters_; ++it) {
      const Eigen::VectorXd grad = 2.0 * (quad_ * z - b);
      Eigen::VectorXd next = simplex_project(z - step * grad);
      double next_obj = partial_objective(next, b);
      // the 1/L step is already non-increasing; the halving loop only guards
      // against floating-point edge cases
      int backoff = 0;
      while (next_obj > obj + 1e-12 * (1.0 + std::abs(obj)) && backoff < 50) {
        step *= 0.5;
        next = simplex_project(z - step * grad);
        next_obj = partial_objective(next, b);
        ++backoff;
      }
      const double delta = (next - z).cwiseAbs().maxCoeff();
      z.swap(next);
      obj = next_obj;
      if (delta <= tolerance_) break;
    }
    return polish(std::move(z), b, obj);
  }

 private:
  // Active-set refinement of the PGD iterate: solve the QP exactly on the
  // supports PGD discovered, pivoting on KKT violations. Gradient descent
  // creeps along the simplex faces; this step lands on the face minimizer
  // and gives off-support coordinates exact zeros, which the dictionary
  // update downstream relies on to stay well conditioned.
  Eigen::VectorXd polish(Eigen::VectorXd z, const Eigen::VectorXd& b, double obj) const {
    const Eigen::Index k = z.size();
    std::vector<Eigen::Index> support;
    for (Eigen::Index i = 0; i < k; ++i)
      if (z(i) > 1e-10) support.push_back(i);
    if (support.empty()) return z;

    Eigen::VectorXd best = z;
    const int max_rounds = static_cast<int>(4 * k + 8);
    for (int round = 0; round < max_rounds; ++round) {
      const auto s = static_cast<Eigen::Index>(support.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
      Eigen::VectorXd rhs(s + 1);
      for (Eigen::Index r = 0; r < s; ++r) {
        for (Eigen::Index c = 0; c < s; ++c)
          kkt(r, c) = 2.0 * quad_(support[static_cast<std::size_t>(r)],
                                  support[static_cast<std::size_t>(c)]);
        kkt(r, s) = 1.0;
        kkt(s, r) = 1.0;
        rhs(r) = 2.0 * b(support[static_cast<std::size_t>(r)]);
      }
      rhs(s) = 1.0;
      const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
      // duplicate atoms make the face singular; any particular solution
      // would break their symmetry arbitrarily, so keep the PGD point
      if (lu.rank() < s + 1) break;
      const Eigen::VectorXd sol = lu.solve(rhs);
      if (!sol.allFinite()) break;

      Eigen::Index worst = -1;
      for (Eigen::Index r = 0; r < s; ++r)
        if (sol(r) < -1e-12 && (worst < 0 || sol(r) < sol(worst))) worst = r;
      if (worst >= 0) {
        support.erase(support.begin() + static_cast<std::ptrdiff_t>(worst));
        if (support.empty()) break;
        continue;
      }

      Eigen::VectorXd candidate = Eigen::VectorXd::Zero(k);
      for (Eigen::Index r = 0; r < s; ++r)
        candidate(support[static_cast<std::size_t>(r)]) = std::max(sol(r), 0.0);
      const double total = candidate.sum();
      if (total <= 0.0) break;
      candidate /= total;

      // KKT: on-support gradients share the multiplier nu; adding an
      // off-support coordinate helps only if its gradient undercuts nu
      const double nu = sol(s);
      const Eigen::VectorXd grad = 2.0 * (quad_ * candidate - b);
      Eigen::Index add = -1;
      double worst_violation = -1e-9 * (1.0 + std::abs(nu));
      for (Eigen::Index i = 0; i < k; ++i) {
        if (candidate(i) > 0.0) continue;
        const double violation = grad(i) - nu;
        if (violation < worst_violation) {
          worst_violation = violation;
          add = i;
        }
      }
      const double cand_obj = partial_objective(candidate, b);
      if (cand_obj <= obj + 1e-12 * (1.0 + std::abs(obj))) {
        best = candidate;
        obj = std::min(obj, cand_obj);
      }
      if (add < 0) break;
      support.clear();
      for (Eigen::Index i = 0; i < k; ++i)
        if (candidate(i) > 0.0) support.push_back(i);
      support.insert(std::lower_bound(support.begin(), support.end(), add), add);
    }
    return best;
  }

  const Eigen::MatrixXd& atoms_;
  const Eigen::MatrixXd& weights_;
  Eigen::MatrixXd quad_;
  double gamma_;
  double step_;
  int max_iters_;
  double tolerance_;
};

}  // namespace

Eigen::VectorXd sparse_code(const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& weights,
                            const Eigen::VectorXd& y, const Eigen::VectorXd& g,
                            const SparseCodeOptions& opt, const Eigen::VectorXd* warm_start) {
  SparseCoder coder(atoms, weights, opt.gamma, opt.max_iters, opt.tolerance);
  return coder.code(y, g, warm_start);
}

namespace {

// negative entropy of the softmax-normalized absolute weight column; a more
// uniform (less discriminative) column scores lower
double entropy_score(const Eigen::MatrixXd& weights, Eigen::Index j) {
  const Eigen::ArrayXd a = weights.col(j).array().abs();
  const double m = a.maxCoeff();
  const Eigen::ArrayXd e = (a - m).exp();
  const Eigen::ArrayXd p = e / e.sum();
  double s = 0.0;
  for (Eigen::Index c = 0; c < p.size(); ++c)
    if (p(c) > 0.0) s += p(c) * std::log(p(c));
  return s;
}

void kill_atom(CompactDictionary& dict, Eigen::Index j) {
  dict.alive[static_cast<std::size_t>(j)] = false;
  dict.atoms.col(j).setZero();
}

}  // namespace

int eliminate_atoms(CompactDictionary& dict, double tau) {
  if (tau < 0.0 || tau > 1.0) throw ParameterError("eliminate_atoms: tau outside [0, 1]");
  const auto k = static_cast<Eigen::Index>(dict.alive.size());
  if (dict.alive_count() < 2) throw ParameterError("eliminate_atoms: fewer than 2 alive atoms");
  if (tau == 0.0) return 0;  // strict inequality never holds

  std::vector<double> score(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index j = 0; j < k; ++j)
    if (dict.alive[static_cast<std::size_t>(j)]) score[static_cast<std::size_t>(j)] = entropy_score(dict.weights, j);

  // global diameter over all alive atoms, fixed at entry
  double diameter = 0.0;
  const auto alive_at_entry = dict.alive_indices();
  for (std::size_t a = 0; a < alive_at_entry.size(); ++a)
    for (std::size_t b = a + 1; b < alive_at_entry.size(); ++b)
      diameter = std::max(
          diameter, (dict.atoms.col(alive_at_entry[a]) - dict.atoms.col(alive_at_entry[b])).norm());

  int killed = 0;
  if (diameter <= 1e-12) {
    // all atoms coincide: keep the best-scoring atom of each class
    std::map<int, Eigen::Index> keep;
    for (const auto j : alive_at_entry) {
      const int c = dict.atom_class[static_cast<std::size_t>(j)];
      const auto it = keep.find(c);
      if (it == keep.end() || score[static_cast<std::size_t>(j)] > score[static_cast<std::size_t>(it->second)])
        keep[c] = j;
    }
    for (const auto j : alive_at_entry) {
      if (keep[dict.atom_class[static_cast<std::size_t>(j)]] != j) {
        kill_atom(dict, j);
        ++killed;
      }
    }
    return killed;
  }

  // duels until fixpoint: each atom whose nearest alive same-class neighbor
  // sits within tau of the entry diameter fights it, and the lower score of
  // the pair dies. Repeating until quiet collapses each tight cluster to its
  // best-scoring member in a single call. The same-class requirement plus the
  // >= 2 check make emptying a class impossible.
  for (bool again = true; again;) {
    again = false;
    for (const auto j : alive_at_entry) {
      if (!dict.alive[static_cast<std::size_t>(j)]) continue;
      const int cls = dict.atom_class[static_cast<std::size_t>(j)];
      if (dict.alive_count_in_class(cls) < 2) continue;

      Eigen::Index nearest = -1;
      double best = std::numeric_limits<double>::infinity();
      for (const auto other : alive_at_entry) {
        if (other == j || !dict.alive[static_cast<std::size_t>(other)]) continue;
        if (dict.atom_class[static_cast<std::size_t>(other)] != cls) continue;
        const double dist = (dict.atoms.col(j) - dict.atoms.col(other)).norm();
        if (dist < best) {
          best = dist;
          nearest = other;
        }
      }
      if (nearest < 0 || best / diameter >= tau) continue;

      const double sj = score[static_cast<std::size_t>(j)];
      const double sk = score[static_cast<std::size_t>(nearest)];
      const Eigen::Index loser =
          sj < sk ? j : sj > sk ? nearest : std::max(j, nearest);
      kill_atom(dict, loser);
      ++killed;
      again = true;
      if (loser == j) break;  // j's own neighborhood changed; rescan
    }
  }
  return killed;
}

namespace {

Eigen::MatrixXd one_hot_labels(const std::vector<int>& labels, int class_count) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(class_count, static_cast<Eigen::Index>(labels.size()));
  for (std::size_t m = 0; m < labels.size(); ++m) g(labels[m], static_cast<Eigen::Index>(m)) = 1.0;
  return g;
}

// k-means++ style pick: first column uniform, the rest weighted by squared
// distance to the nearest column already chosen, so the seeds spread over the
// class hull; cycles when the class runs out of distinct columns
std::vector<Eigen::Index> pick_class_atoms(const Eigen::MatrixXd& y,
                                           const std::vector<Eigen::Index>& members, int count,
                                           Rng& rng) {
  std::vector<Eigen::Index> chosen;
  chosen.push_back(members[rng.index(members.size())]);
  std::vector<double> dist2(members.size());
  for (std::size_t i = 0; i < members.size(); ++i)
    dist2[i] = (y.col(members[i]) - y.col(chosen.back())).squaredNorm();
  while (static_cast<int>(chosen.size()) < count) {
    double total = 0.0;
    for (const double d : dist2) total += d;
    if (total <= 0.0) break;  // only duplicates of chosen columns remain
    double r = rng.uniform() * total;
    std::size_t pick = members.size();
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (dist2[i] <= 0.0) continue;
      pick = i;
      if (r < dist2[i]) break;
      r -= dist2[i];
    }
    chosen.push_back(members[pick]);
    for (std::size_t i = 0; i < members.size(); ++i)
      dist2[i] = std::min(dist2[i], (y.col(members[i]) - y.col(chosen.back())).squaredNorm());
  }
  for (std::size_t i = 0; static_cast<int>(chosen.size()) < count; ++i)
    chosen.push_back(members[i % members.size()]);
  return chosen;
}

Eigen::MatrixXd ridge_solve(const Eigen::MatrixXd& target, const Eigen::MatrixXd& codes,
                            double ridge) {
  // minimizes ||target - X codes||_F^2 + ridge ||X||_F^2 over X
  const Eigen::Index k = codes.rows();
  Eigen::MatrixXd gram = codes * codes.transpose();
  gram.diagonal().array() += ridge;
  return gram.ldlt().solve(codes * target.transpose()).transpose();
}

// The ridge on the code->label regression doubles as the signal behind the
// pruning score: |W| columns scale like usage/(usage + ridge), so with a
// ridge of order one the entropy score separates well-used atoms from
// barely-used ones instead of seeing every column as one-hot.
constexpr double kWeightRidge = 1.0;
constexpr double kProxRidge = 1e-3;  // per-column weight of the ||A - A_prev|| penalty

}  // namespace

AcdlResult acdl_fit(const LayerDataset& dataset, const AcdlConfig& config,
                    const AcdlObserver& observer) {
  if (config.tau < 0.0 || config.tau > 1.0) throw ParameterError("acdl_fit: tau outside [0, 1]");
  if (config.stop_recon_error < 0.0)
    throw ParameterError("acdl_fit: negative stopping criterion");
  if (config.max_outer_iters < 1 || config.initial_atoms_per_class < 1)
    throw ParameterError("acdl_fit: iteration and atom counts must be positive");
  if (!dataset.y.allFinite()) throw NumericError("acdl_fit: non-finite data");

  const int class_count = dataset.class_count();
  const Eigen::Index m = dataset.y.cols();
  if (m < class_count) throw ParameterError("acdl_fit: fewer examples than classes");

  Eigen::MatrixXd y = dataset.y;
  if (config.normalize_columns) {
    for (Eigen::Index c = 0; c < m; ++c) {
      const double norm = y.col(c).norm();
      if (norm > 0.0) y.col(c) /= norm;
    }
  }
  // work in units of the per-column RMS: the gamma trade-off then means the
  // same thing at every layer magnitude and relative errors are exactly
  // scale-free
  const double y_scale = y.norm() / std::sqrt(static_cast<double>(m));
  if (y_scale <= 0.0) throw DegenerateError("acdl_fit: all-zero data matrix");
  y /= y_scale;
  const double y_norm = y.norm();

  const int k0 = class_count * config.initial_atoms_per_class;
  Rng rng(config.seed);

  CompactDictionary dict;
  dict.atoms.resize(y.rows(), k0);
  dict.weights = Eigen::MatrixXd::Zero(class_count, k0);
  dict.alive.assign(static_cast<std::size_t>(k0), true);
  dict.atom_class.resize(static_cast<std::size_t>(k0));
  dict.labels_onehot = one_hot_labels(dataset.labels, class_count);
  dict.codes = Eigen::MatrixXd::Zero(k0, m);

  {
    Eigen::Index next = 0;
    for (int c = 0; c < class_count; ++c) {
      std::vector<Eigen::Index> members;
      for (std::size_t i = 0; i < dataset.labels.size(); ++i)
        if (dataset.labels[i] == c) members.push_back(static_cast<Eigen::Index>(i));
      if (members.empty()) throw DegenerateError("acdl_fit: class " + std::to_string(c) + " empty");
      for (const auto col : pick_class_atoms(y, members, config.initial_atoms_per_class, rng)) {
        dict.atoms.col(next) = y.col(col);
        dict.atom_class[static_cast<std::size_t>(next)] = c;
        ++next;
      }
    }
  }

  const auto gather = [](const Eigen::MatrixXd& src, const std::vector<Eigen::Index>& cols) {
    Eigen::MatrixXd out(src.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = src.col(cols[i]);
    return out;
  };

  // initial codes: reconstruction-only coding against the raw dictionary,
  // then W by ridge regression so the first pruning sees usable entropies
  {
    const Eigen::MatrixXd no_weights = Eigen::MatrixXd::Zero(class_count, k0);
    SparseCoder coder(dict.atoms, no_weights, 0.0, config.max_inner_iters,
                      config.inner_tolerance);
    for (Eigen::Index col = 0; col < m; ++col)
      dict.codes.col(col) = coder.code(y.col(col), dict.labels_onehot.col(col), nullptr);
    dict.weights = ridge_solve(dict.labels_onehot, dict.codes, kWeightRidge);
  }

  AcdlResult result;
  int rise_streak = 0;
  for (int iter = 1; iter <= config.max_outer_iters; ++iter) {
    const auto alive = dict.alive_indices();
    const auto ka = static_cast<Eigen::Index>(alive.size());

    Eigen::MatrixXd atoms_a = gather(dict.atoms, alive);
    Eigen::MatrixXd weights_a = gather(dict.weights, alive);

    const auto code_all = [&](const Eigen::MatrixXd& atoms, const Eigen::MatrixXd& weights,
                              const std::vector<Eigen::Index>& cols) {
      Eigen::MatrixXd codes(static_cast<Eigen::Index>(cols.size()), m);
      SparseCoder coder(atoms, weights, config.gamma, config.max_inner_iters,
                        config.inner_tolerance);
      Eigen::VectorXd warm(static_cast<Eigen::Index>(cols.size()));
      for (Eigen::Index col = 0; col < m; ++col) {
        for (std::size_t i = 0; i < cols.size(); ++i)
          warm(static_cast<Eigen::Index>(i)) = dict.codes(cols[i], col);
        codes.col(col) = coder.code(y.col(col), dict.labels_onehot.col(col), &warm);
      }
      return codes;
    };
    const auto scatter_codes = [&](const Eigen::MatrixXd& codes,
                                   const std::vector<Eigen::Index>& cols) {
      dict.codes.setZero();
      for (std::size_t i = 0; i < cols.size(); ++i)
        dict.codes.row(cols[i]) = codes.row(static_cast<Eigen::Index>(i));
    };

    // 1) sparse-code every column over alive atoms, warm-started
    Eigen::MatrixXd codes_a = code_all(atoms_a, weights_a, alive);
    scatter_codes(codes_a, alive);

    // 2) dictionary update: least squares with the ridge centred on the
    // current atoms. Near-duplicate atoms make Z Z^T nearly singular and a
    // plain ridge lets such pairs drift apart along the null direction
    // (their sum is pinned by the data, their difference is free, and a
    // later pruning of one then strands the other far from any column).
    // Penalizing distance from the previous atoms damps those modes, and
    // atoms the coder never touched simply stay where they are.
    {
      const double mu = kProxRidge * static_cast<double>(m);
      Eigen::MatrixXd gram = codes_a * codes_a.transpose();
      gram.diagonal().array() += mu;
      atoms_a =
          gram.ldlt().solve(codes_a * y.transpose() + mu * atoms_a.transpose()).transpose();
    }
    // 3) classifier update, ridge regression codes -> labels
    weights_a = ridge_solve(dict.labels_onehot, codes_a, kWeightRidge);

    for (Eigen::Index i = 0; i < ka; ++i) {
      dict.atoms.col(alive[static_cast<std::size_t>(i)]) = atoms_a.col(i);
      dict.weights.col(alive[static_cast<std::size_t>(i)]) = weights_a.col(i);
    }

    // 4) prune redundant atoms; when anything was killed, re-code against
    // the survivors so the stopping error always describes the pruned
    // dictionary with codes that match it
    double recon;
    double class_loss;
    int alive_now = static_cast<int>(ka);
    int killed = 0;
    if (config.tau > 0.0 && dict.alive_count() >= 2) killed = eliminate_atoms(dict, config.tau);
    if (killed > 0) {
      for (Eigen::Index j = 0; j < dict.weights.cols(); ++j)
        if (!dict.alive[static_cast<std::size_t>(j)]) {
          dict.weights.col(j).setZero();
          dict.codes.row(j).setZero();
        }
      const auto survivors = dict.alive_indices();
      const Eigen::MatrixXd atoms_s = gather(dict.atoms, survivors);
      const Eigen::MatrixXd weights_s = gather(dict.weights, survivors);
      const Eigen::MatrixXd codes_s = code_all(atoms_s, weights_s, survivors);
      scatter_codes(codes_s, survivors);
      recon = (y - atoms_s * codes_s).norm() / y_norm;
      class_loss = (dict.labels_onehot - weights_s * codes_s).squaredNorm();
      alive_now = static_cast<int>(survivors.size());
    } else {
      recon = (y - atoms_a * codes_a).norm() / y_norm;
      class_loss = (dict.labels_onehot - weights_a * codes_a).squaredNorm();
    }

    result.recon_error_trace.push_back(recon);
    result.iteration_records.push_back({alive_now, recon, class_loss});
    if (observer) observer(iter, dict, recon);

    if (recon <= config.stop_recon_error) {
      result.converged = true;
      break;
    }
    if (result.recon_error_trace.size() >= 2) {
      const double prev = result.recon_error_trace[result.recon_error_trace.size() - 2];
      rise_streak = recon > prev * 1.10 ? rise_streak + 1 : 0;
      if (rise_streak >= 5) {
        result.converged = false;
        break;
      }
    }
  }

  result.iterations = static_cast<int>(result.recon_error_trace.size());
  result.d_selected = dict.alive_count();
  result.code_l1_norm = dict.codes.cwiseAbs().sum();
  dict.atoms *= y_scale;  // back to the caller's units
  result.dictionary = std::move(dict);
  return result;
}

std::map<std::string, LayerDimSelection> select_layer_dims(
    const std::map<std::string, LayerDataset>& datasets,
    const std::map<std::string, AcdlConfig>& configs) {
  std::map<std::string, LayerDimSelection> out;
  for (const auto& [layer, dataset] : datasets) {
    const auto cfg = configs.find(layer);
    if (cfg == configs.end()) throw ParameterError("select_layer_dims: no config for " + layer);
    LayerDimSelection sel;
    sel.n = static_cast<int>(dataset.y.rows());
    sel.result = acdl_fit(dataset, cfg->second);
    sel.d = sel.result.d_selected;
    sel.compression_ratio = 1.0 - static_cast<double>(sel.d) / sel.n;
    sel.converged = sel.result.converged;
    out[layer] = std::move(sel);
  }
  return out;
}

}  // namespace asckit
