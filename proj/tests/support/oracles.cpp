#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "f2f/flow.hpp"
#include "f2f/noise.hpp"
#include "f2f/synthetic.hpp"
#include "f2f/warp.hpp"

namespace f2f::testing {

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

std::string failures(const std::vector<Check>& checks) {
  std::string out;
  for (const auto& c : checks) {
    if (!c.pass) out += c.name + " (" + c.detail + "); ";
  }
  return out;
}

double relative_error(double analytic, double numeric) {
  // Gradients that vanish analytically (e.g. a bias feeding batch norm) show
  // up numerically as round-off of order eps * |loss| / h; treat those as zero.
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

DTensor random_tensor(DTensor::Shape shape, std::uint64_t seed, double lo, double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  DTensor t(shape);
  for (auto& v : t.values()) v = dist(rng);
  return t;
}

DTensor random_away_from_zero(DTensor::Shape shape, std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(margin, 1.0);
  std::bernoulli_distribution negative(0.5);
  DTensor t(shape);
  for (auto& v : t.values()) v = negative(rng) ? -mag(rng) : mag(rng);
  return t;
}

GradCheck check_gradients(const LossBuilder& build, std::vector<DTensor> inputs, const std::vector<DParam*>& params,
                          double h) {
  // Analytic pass.
  DTape tape;
  std::vector<DVar> leaves;
  for (const auto& in : inputs) leaves.push_back(tape.leaf(in, true));
  for (auto* p : params) p->grad.fill(0.0);
  DVar loss = build(tape, leaves);
  tape.backward(loss);

  auto evaluate = [&]() {
    DTape plain(false);
    std::vector<DVar> vs;
    for (const auto& in : inputs) vs.push_back(plain.leaf(in));
    return build(plain, vs)->value[0];
  };

  GradCheck result;
  auto compare = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + h;
    const double up = evaluate();
    slot = saved - h;
    const double down = evaluate();
    slot = saved;
    const double numeric = (up - down) / (2.0 * h);
    result.max_rel_error = std::max(result.max_rel_error, relative_error(analytic, numeric));
    ++result.entries;
  };
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& g = leaves[k]->grad;
    for (std::size_t i = 0; i < inputs[k].size(); ++i) compare(inputs[k][i], g.empty() ? 0.0 : g[i]);
  }
  for (auto* p : params) {
    const DTensor analytic = p->grad;
    for (std::size_t i = 0; i < p->value.size(); ++i) compare(p->value[i], analytic[i]);
  }
  return result;
}

namespace {

DTensor random_mask(int n, int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(0.7);
  DTensor m({n, 1, rows, cols});
  for (auto& v : m.values()) v = keep(rng) ? 1.0 : 0.0;
  return m;
}

DParam param(DTensor value) { return DParam(std::move(value)); }

}  // namespace

std::vector<OperatorGradients> gradient_suite(int instances, std::uint64_t seed) {
  std::vector<OperatorGradients> out;
  auto run = [&](const std::string& name, const std::function<GradCheck(std::uint64_t)>& one) {
    OperatorGradients og{name, 0, 0.0};
    for (int i = 0; i < instances; ++i) {
      const GradCheck g = one(seed * 1000003ull + static_cast<std::uint64_t>(i) * 7919ull + out.size());
      og.max_rel_error = std::max(og.max_rel_error, g.max_rel_error);
      ++og.instances;
    }
    out.push_back(og);
  };

  run("conv2d", [](std::uint64_t s) {
    const int kernels[] = {1, 3, 5};
    const int k = kernels[s % 3];
    DParam w = param(random_tensor({3, 2, k, k}, s + 1));
    DParam b = param(random_tensor({1, 3, 1, 1}, s + 2));
    const DTensor target = random_tensor({1, 3, 5, 5}, s + 3);
    const DTensor mask = random_mask(1, 5, 5, s + 4);
    return check_gradients(
        [&](DTape& t, const std::vector<DVar>& x) { return l2_loss(t, conv2d(t, x[0], w, b, (k - 1) / 2), target, mask); },
        {random_tensor({1, 2, 5, 5}, s)}, {&w, &b});
  });

  run("conv2d_sum", [](std::uint64_t s) {
    DParam w = param(random_tensor({3, 2, 3, 3}, s + 1));
    DParam b = param(random_tensor({1, 3, 1, 1}, s + 2));
    return check_gradients([&](DTape& t, const std::vector<DVar>& x) { return sum(t, conv2d(t, x[0], w, b, 1)); },
                           {random_tensor({2, 2, 5, 5}, s)}, {&w, &b});
  });

  run("relu", [](std::uint64_t s) {
    const DTensor target = random_tensor({2, 2, 4, 4}, s + 1);
    const DTensor mask = random_mask(2, 4, 4, s + 2);
    return check_gradients([&](DTape& t, const std::vector<DVar>& x) { return l2_loss(t, relu(t, x[0]), target, mask); },
                           {random_away_from_zero({2, 2, 4, 4}, s, 1e-2)}, {});
  });

  run("batch_norm_train", [](std::uint64_t s) {
    DParam gamma = param(random_tensor({1, 2, 1, 1}, s + 1, 0.5, 1.5));
    DParam beta = param(random_tensor({1, 2, 1, 1}, s + 2));
    RunningStats<double> stats(2);
    const DTensor target = random_tensor({2, 2, 4, 4}, s + 3);
    const DTensor mask = random_mask(2, 4, 4, s + 4);
    BatchNormOptions opts;
    opts.update_stats = false;
    return check_gradients(
        [&](DTape& t, const std::vector<DVar>& x) {
          return l2_loss(t, batch_norm(t, x[0], gamma, beta, stats, NormMode::kTrain, opts), target, mask);
        },
        {random_tensor({2, 2, 4, 4}, s)}, {&gamma, &beta});
  });

  run("batch_norm_eval", [](std::uint64_t s) {
    DParam gamma = param(random_tensor({1, 2, 1, 1}, s + 1, 0.5, 1.5));
    DParam beta = param(random_tensor({1, 2, 1, 1}, s + 2));
    RunningStats<double> stats(2);
    stats.mean = {0.3, -0.2};
    stats.var = {0.7, 1.8};
    const DTensor target = random_tensor({2, 2, 4, 4}, s + 3);
    const DTensor mask = random_mask(2, 4, 4, s + 4);
    return check_gradients(
        [&](DTape& t, const std::vector<DVar>& x) {
          return l2_loss(t, batch_norm(t, x[0], gamma, beta, stats, NormMode::kEval), target, mask);
        },
        {random_tensor({2, 2, 4, 4}, s)}, {&gamma, &beta});
  });

  run("subtract", [](std::uint64_t s) {
    const DTensor target = random_tensor({1, 2, 4, 4}, s + 2);
    const DTensor mask = random_mask(1, 4, 4, s + 3);
    return check_gradients(
        [&](DTape& t, const std::vector<DVar>& x) { return l2_loss(t, subtract(t, x[0], x[1]), target, mask); },
        {random_tensor({1, 2, 4, 4}, s), random_tensor({1, 2, 4, 4}, s + 1)}, {});
  });

  run("sum", [](std::uint64_t s) {
    return check_gradients([](DTape& t, const std::vector<DVar>& x) { return sum(t, x[0]); },
                           {random_tensor({2, 3, 3, 4}, s)}, {});
  });

  run("masked_l1_loss", [](std::uint64_t s) {
    const DTensor target = random_tensor({2, 2, 4, 4}, s + 1);
    DTensor pred = random_away_from_zero({2, 2, 4, 4}, s, 1e-2);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] += target[i];
    const DTensor mask = random_mask(2, 4, 4, s + 2);
    return check_gradients([&](DTape& t, const std::vector<DVar>& x) { return masked_l1_loss(t, x[0], target, mask); },
                           {pred}, {});
  });

  run("l2_loss", [](std::uint64_t s) {
    const DTensor target = random_tensor({2, 2, 4, 4}, s + 1);
    const DTensor mask = random_mask(2, 4, 4, s + 2);
    return check_gradients([&](DTape& t, const std::vector<DVar>& x) { return l2_loss(t, x[0], target, mask); },
                           {random_tensor({2, 2, 4, 4}, s)}, {});
  });

  // conv -> bn -> relu -> conv -> residual subtract -> masked L1, the model's
  // building blocks composed. Instances with a ReLU input or an L1 residual
  // within 2e-3 of its kink are redrawn: a +-h probe may cross the kink there
  // and central differences stop approximating the one-sided derivative.
  run("composite", [](std::uint64_t s) {
    for (std::uint64_t draw = s;; draw += 0x9e3779b97f4a7c15ull) {
      DParam w1 = param(random_tensor({3, 1, 3, 3}, draw + 1));
      DParam b1 = param(random_tensor({1, 3, 1, 1}, draw + 2));
      DParam gamma = param(random_tensor({1, 3, 1, 1}, draw + 3, 0.5, 1.5));
      DParam beta = param(random_tensor({1, 3, 1, 1}, draw + 4));
      DParam w2 = param(random_tensor({1, 3, 3, 3}, draw + 5));
      DParam b2 = param(random_tensor({1, 1, 1, 1}, draw + 6));
      RunningStats<double> stats(3);
      BatchNormOptions opts;
      opts.update_stats = false;
      const DTensor target = random_tensor({2, 1, 5, 5}, draw + 7, 5.0, 6.0);
      const DTensor mask = random_mask(2, 5, 5, draw + 8);
      const DTensor input = random_tensor({2, 1, 5, 5}, draw);

      DTape probe(false);
      const auto pre = batch_norm(probe, conv2d(probe, probe.leaf(input), w1, b1, 1), gamma, beta, stats,
                                  NormMode::kTrain, opts);
      const auto r = conv2d(probe, relu(probe, pre), w2, b2, 1);
      double margin = 1.0;
      for (double v : pre->value.values()) margin = std::min(margin, std::abs(v));
      for (std::size_t i = 0; i < input.size(); ++i) margin = std::min(margin, std::abs(input[i] - r->value[i] - target[i]));
      if (margin < 2e-3) continue;

      return check_gradients(
          [&](DTape& t, const std::vector<DVar>& x) {
            auto h = conv2d(t, x[0], w1, b1, 1);
            h = relu(t, batch_norm(t, h, gamma, beta, stats, NormMode::kTrain, opts));
            auto res = conv2d(t, h, w2, b2, 1);
            return masked_l1_loss(t, subtract(t, x[0], res), target, mask);
          },
          {input}, {&w1, &b1, &gamma, &beta, &w2, &b2});
    }
  });
  return out;
}

double central_epe(const FlowField& flow, double u, double v) {
  const int r0 = flow.rows() / 10;
  const int c0 = flow.cols() / 10;
  double s = 0.0;
  int n = 0;
  for (int r = r0; r < flow.rows() - r0; ++r) {
    for (int c = c0; c < flow.cols() - c0; ++c) {
      s += std::hypot(flow.u(r, c) - u, flow.v(r, c) - v);
      ++n;
    }
  }
  return s / n;
}

RegistrationResult registration_suite(int size, std::uint64_t seed) {
  const Frame reference = periodic_blurred_noise(size, size, 2.0, seed);
  // target(r, c) = reference(r + 1, c + 2): ground-truth flow (u, v) = (2, 1).
  const Frame target = circular_shift(reference, -2, -1);
  RegistrationResult out;
  out.epe_clean = central_epe(tvl1_flow(target, reference, FlowConfig{}), 2.0, 1.0);

  const SeededRng rng(seed);
  const NoiseSpec noise = NoiseSpec::awgn(25.0 / 255.0);
  FlowConfig cfg;
  cfg.prefilter_downscale = 2;
  out.epe_noisy =
      central_epe(tvl1_flow(apply_noise(target, noise, rng, 1), apply_noise(reference, noise, rng, 2), cfg), 2.0, 1.0);
  return out;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Check make(std::string name, bool pass, std::string detail = {}) { return {std::move(name), pass, std::move(detail)}; }

// Zero set of mask grown by Chebyshev radius r, by brute force.
Mask brute_dilate(const Mask& m, int r) {
  Mask out(m.rows(), m.cols(), 1);
  for (int y = 0; y < m.rows(); ++y) {
    for (int x = 0; x < m.cols(); ++x) {
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = y + dy;
          const int xx = x + dx;
          if (yy >= 0 && yy < m.rows() && xx >= 0 && xx < m.cols() && m(yy, xx) == 0) out(y, x) = 0;
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Check> warp_suite() {
  std::vector<Check> checks;
  const int rows = 24;
  const int cols = 32;
  const Frame texture = synthetic_texture(rows, cols, 3);

  {
    const auto w = warp_bilinear(texture, FlowField(rows, cols));
    const bool valid = std::all_of(w.valid.pixels().begin(), w.valid.pixels().end(), [](auto v) { return v == 1; });
    checks.push_back(make("zero flow is identity", w.warped == texture && valid));
  }
  {
    Frame ramp(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) ramp(r, c) = static_cast<float>(static_cast<double>(c) / cols);
    const auto w = warp_bilinear(ramp, FlowField(rows, cols, 0.5f, 0.0f));
    double worst = 0.0;
    bool validity_ok = true;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const bool inside = c <= cols - 2;
        validity_ok = validity_ok && (w.valid(r, c) == (inside ? 1 : 0));
        if (inside) worst = std::max(worst, std::abs(w.warped(r, c) - (c + 0.5) / cols));
      }
    }
    checks.push_back(make("ramp warped by half a pixel", worst < 1e-6 && validity_ok, "max err " + fmt(worst)));
  }
  {
    const auto w = warp_bilinear(texture, FlowField(rows, cols, static_cast<float>(cols), 0.0f));
    checks.push_back(make("flow (W,0) invalidates everything",
                          std::all_of(w.valid.pixels().begin(), w.valid.pixels().end(), [](auto v) { return v == 0; })));
  }
  {
    // Affine image, smooth flow: bilinear reproduces the affine function at
    // every valid sample.
    Frame affine(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) affine(r, c) = static_cast<float>(0.1 + 0.01 * r + 0.02 * c);
    FlowField flow(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        flow.u(r, c) = static_cast<float>(1.7 * std::sin(0.3 * r + 0.1 * c));
        flow.v(r, c) = static_cast<float>(-1.3 * std::cos(0.2 * c - 0.15 * r));
      }
    }
    const auto w = warp_bilinear(affine, flow);
    double worst = 0.0;
    int valid = 0;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        if (!w.valid(r, c)) continue;
        ++valid;
        const double y = r + flow.v(r, c);
        const double x = c + flow.u(r, c);
        worst = std::max(worst, std::abs(w.warped(r, c) - (0.1 + 0.01 * y + 0.02 * x)));
      }
    }
    checks.push_back(make("affine image warp exact", worst < 1e-5 && valid > rows * cols / 2, "max err " + fmt(worst)));
  }

  {
    const auto d = divergence(FlowField(rows, cols, 1.5f, -0.7f));
    const bool zero = std::all_of(d.pixels().begin(), d.pixels().end(), [](float v) { return std::abs(v) < 1e-6f; });
    checks.push_back(make("constant flow divergence 0", zero));
  }
  {
    const double alpha = 0.5;
    FlowField radial(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        radial.u(r, c) = static_cast<float>(alpha * (c - cols / 2.0));
        radial.v(r, c) = static_cast<float>(alpha * (r - rows / 2.0));
      }
    }
    const auto d = divergence(radial);
    double worst = 0.0;
    for (int r = 1; r < rows - 1; ++r)
      for (int c = 1; c < cols - 1; ++c) worst = std::max(worst, std::abs(d(r, c) - 2.0 * alpha));
    checks.push_back(make("radial flow divergence 2 alpha", worst < 1e-5, "max err " + fmt(worst)));

    OcclusionConfig occ;
    occ.tau_div = 0.5;
    occ.dilation_radius = 0;
    const auto mask = occlusion_mask(radial, occ);
    bool interior_zero = true;
    for (int r = 1; r < rows - 1; ++r)
      for (int c = 1; c < cols - 1; ++c) interior_zero = interior_zero && mask(r, c) == 0;
    checks.push_back(make("radial flow with 2 alpha = 1 masked at tau 0.5", interior_zero));
  }
  {
    FlowField sq(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) sq.u(r, c) = static_cast<float>(c * c);
    const auto d = divergence(sq);
    double worst = 0.0;
    for (int r = 0; r < rows; ++r)
      for (int c = 1; c < cols - 1; ++c) worst = std::max(worst, std::abs(d(r, c) - 2.0 * c));
    checks.push_back(make("divergence of (x^2, 0) is 2x", worst < 1e-4, "max err " + fmt(worst)));
  }

  {
    OcclusionConfig occ;
    occ.dilation_radius = 0;
    const auto mask = occlusion_mask(FlowField(rows, cols), occ);
    checks.push_back(make("zero flow keeps every pixel",
                          std::all_of(mask.pixels().begin(), mask.pixels().end(), [](auto v) { return v == 1; })));
  }
  {
    // Domain-exit bands for constant integer flows (sign-dependent side).
    OcclusionConfig occ;
    occ.tau_div = 1e9;
    occ.dilation_radius = 0;
    struct Case {
      int a, b;
    };
    bool ok = true;
    std::string detail;
    for (const Case k : {Case{3, 0}, Case{-2, 0}, Case{0, 2}, Case{0, -4}, Case{1, -1}}) {
      const auto mask = occlusion_mask(FlowField(rows, cols, static_cast<float>(k.a), static_cast<float>(k.b)), occ);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const bool exits = c + k.a < 0 || c + k.a > cols - 1 || r + k.b < 0 || r + k.b > rows - 1;
          if (mask(r, c) != (exits ? 0 : 1)) {
            ok = false;
            detail = "flow (" + std::to_string(k.a) + "," + std::to_string(k.b) + ") at " + std::to_string(r) + "," +
                     std::to_string(c);
          }
        }
      }
    }
    checks.push_back(make("domain-exit bands exact", ok, detail));
  }
  {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution zero(0.05);
    Mask m(rows, cols, 1);
    for (auto& v : m.pixels()) v = zero(rng) ? 0 : 1;
    bool nested = true;
    bool brute = true;
    Mask previous = m;
    for (int r = 0; r <= 3; ++r) {
      const Mask d = dilate_zeros(m, r);
      brute = brute && d == brute_dilate(m, r);
      for (std::size_t i = 0; i < d.size(); ++i) nested = nested && !(previous[i] == 0 && d[i] == 1);
      previous = d;
    }
    checks.push_back(make("dilation monotone in radius", nested));
    checks.push_back(make("dilation matches brute force", brute));
  }

  {
    const Frame f = synthetic_texture(64, 64, 21);
    const auto pair = build_pair(f, f, FlowConfig{}, OcclusionConfig{});
    double err = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) err += std::abs(pair.warped[i] - f[i]);
    err /= static_cast<double>(f.size());
    checks.push_back(make("static pair", pair.visible_fraction() >= 0.95 && err < 1e-3,
                          "visible " + fmt(pair.visible_fraction()) + " err " + fmt(err)));
  }
  {
    const Frame ref = periodic_blurred_noise(64, 64, 2.0, 5);
    const Frame ft = circular_shift(ref, -2, -1);
    const auto pair = build_pair(ft, ref, FlowConfig{}, OcclusionConfig{});
    double err = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < ft.size(); ++i) {
      if (!pair.mask[i]) continue;
      err += std::abs(pair.warped[i] - ft[i]);
      n += 1.0;
    }
    err /= std::max(n, 1.0);
    checks.push_back(make("translated pair masked error", n > 0 && err < 0.02, "err " + fmt(err)));
  }
  {
    const auto pair = build_pair_from_flow(texture, FlowField(rows, cols, static_cast<float>(cols), 0.0f), OcclusionConfig{});
    const bool all_zero = std::all_of(pair.mask.pixels().begin(), pair.mask.pixels().end(), [](auto v) { return v == 0; });
    checks.push_back(make("out-of-view pair skipped", all_zero && pair.skipped));
  }
  return checks;
}

namespace {

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  const double mean = s / x.size();
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / x.size())};
}

std::vector<double> difference(const Frame& a, const Frame& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = static_cast<double>(a[i]) - b[i];
  return d;
}

double lag1_autocorrelation(const Image<float>& n) {
  double num = 0.0;
  double den = 0.0;
  double mean = 0.0;
  for (float v : n.pixels()) mean += v;
  mean /= n.size();
  for (int r = 0; r < n.rows(); ++r) {
    for (int c = 0; c < n.cols(); ++c) {
      const double a = n(r, c) - mean;
      den += a * a;
      if (c + 1 < n.cols()) num += a * (n(r, c + 1) - mean);
    }
  }
  return num / den * (static_cast<double>(n.size()) / (n.size() - n.rows()));
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma.mean) * (b[i] - mb.mean);
  return s / a.size() / (ma.std * mb.std);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<double> to_vector(const Image<float>& f) { return {f.pixels().begin(), f.pixels().end()}; }

}  // namespace

std::vector<Check> noise_suite(std::uint64_t seed) {
  std::vector<Check> checks;
  const int n = 1000;
  const Frame zero(n, n, 0.0f);
  const Frame one(n, n, 1.0f);
  const Frame half(n, n, 0.5f);
  const SeededRng rng(seed);
  const double s25 = 25.0 / 255.0;

  {
    const Frame u = synthetic_texture(64, 64, 1);
    checks.push_back(make("awgn(0) is identity", apply_noise(u, NoiseSpec::awgn(0.0), rng, 1) == u));
  }
  {
    const Moments m = moments(difference(apply_noise(half, NoiseSpec::awgn(s25), rng, 1), half));
    checks.push_back(make("awgn std within 1%", std::abs(m.std / s25 - 1.0) < 0.01, "ratio " + fmt(m.std / s25)));
    checks.push_back(make("awgn mean within 1e-3", std::abs(m.mean) < 1e-3, "mean " + fmt(m.mean)));
  }
  {
    const double s75 = 75.0 / 255.0;
    const Moments m = moments(difference(apply_noise(one, NoiseSpec::multiplicative(s75), rng, 2), one));
    checks.push_back(make("multiplicative std within 2%", std::abs(m.std / s75 - 1.0) < 0.02, "ratio " + fmt(m.std / s75)));
  }
  {
    auto gen = rng.stream(3, StreamPurpose::kNoise);
    const auto field = correlated_noise(n, n, s25, 2.0, gen);
    const Moments m = moments(to_vector(field));
    checks.push_back(make("correlated std within 2%", std::abs(m.std / s25 - 1.0) < 0.02, "ratio " + fmt(m.std / s25)));
    const double rho = lag1_autocorrelation(field);
    checks.push_back(make("correlated lag-1 autocorrelation > 0.3", rho > 0.3, "rho " + fmt(rho)));

    const Frame white = apply_noise(zero, NoiseSpec::awgn(s25), rng, 4);
    const double rho_white = lag1_autocorrelation(white);
    checks.push_back(make("awgn lag-1 autocorrelation < 0.01", std::abs(rho_white) < 0.01, "rho " + fmt(rho_white)));

    auto tiny = rng.stream(5, StreamPurpose::kNoise);
    const auto unit_kernel = correlated_noise(n, n, s25, 0.5, tiny);
    const double ks = ks_statistic(to_vector(unit_kernel), to_vector(white));
    checks.push_back(make("single-pixel disk matches awgn (KS < 0.01)", ks < 0.01, "KS " + fmt(ks)));
  }
  {
    const Frame noisy = apply_noise(half, NoiseSpec::salt_pepper(0.25), rng, 6);
    std::size_t replaced = 0;
    for (std::size_t i = 0; i < noisy.size(); ++i) replaced += noisy[i] != 0.5f;
    const double frac = static_cast<double>(replaced) / noisy.size();
    checks.push_back(make("salt-pepper replaced fraction 0.25 +- 0.005", std::abs(frac - 0.25) < 0.005, fmt(frac)));

    std::vector<double> values = to_vector(noisy);
    std::nth_element(values.begin(), values.begin() + values.size() / 2, values.end());
    const double median = values[values.size() / 2];
    checks.push_back(make("salt-pepper keeps the median of u = 0.5", std::abs(median - 0.5) < 1e-6, fmt(median)));

    const Frame u = synthetic_texture(64, 64, 2);
    checks.push_back(make("salt-pepper p=0 is identity", apply_noise(u, NoiseSpec::salt_pepper(0.0), rng, 7) == u));

    const Frame full = apply_noise(zero, NoiseSpec::salt_pepper(1.0), rng, 8);
    const Moments m = moments(to_vector(full));
    const auto [lo, hi] = std::minmax_element(full.pixels().begin(), full.pixels().end());
    checks.push_back(make("salt-pepper p=1 uniform moments", std::abs(m.mean / 0.5 - 1.0) < 0.01 && *lo >= 0.0f && *hi <= 1.0f,
                          "mean " + fmt(m.mean)));
  }
  {
    bool flat = true;
    for (int q : {1, 10, 50, 90, 100}) {
      const Frame out = jpeg_degrade(Frame(37, 45, 0.5f), q);
      for (float v : out.pixels()) flat = flat && std::abs(v - 0.5) <= 1.0 / 255.0;
    }
    checks.push_back(make("jpeg on constant 0.5 stays within 1/255", flat));

    const Frame noisy = apply_noise(synthetic_texture(40, 52, 9), NoiseSpec::awgn(s25), rng, 9);
    bool multiples = true;
    for (int q : {5, 10, 75}) {
      const auto table = jpeg_quant_table(q);
      for (const auto& block : jpeg_dequantized_blocks(noisy, q)) {
        for (int i = 0; i < 64; ++i) {
          const double k = block[i] / table[i];
          multiples = multiples && std::abs(k - std::round(k)) < 1e-9;
        }
      }
    }
    checks.push_back(make("jpeg coefficients are multiples of the table", multiples));

    Frame exact(40, 52);
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> level(0, 255);
    for (auto& v : exact.pixels()) v = static_cast<float>(level(gen) / 255.0);
    const Frame q100 = jpeg_degrade(exact, 100);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) worst = std::max(worst, std::abs(static_cast<double>(q100[i]) - exact[i]));
    checks.push_back(make("jpeg quality 100 error <= 2/255", worst <= 2.0 / 255.0 + 1e-7, "max " + fmt(worst * 255) + "/255"));

    // IJG table spot values: quality 50 is the base table, quality 10 scales by 5.
    const auto t50 = jpeg_quant_table(50);
    const auto t10 = jpeg_quant_table(10);
    checks.push_back(make("jpeg IJG scaling", t50[0] == 16 && t10[0] == 80 && t10[63] == 255 && jpeg_quant_table(100)[0] == 1));
  }
  {
    const auto a = difference(apply_noise(half, NoiseSpec::awgn(s25), rng, 20), half);
    const auto b = difference(apply_noise(half, NoiseSpec::awgn(s25), rng, 21), half);
    const double rho = correlation(a, b);
    checks.push_back(make("consecutive frames independent", std::abs(rho) < 0.01, "rho " + fmt(rho)));
    const bool repeat = apply_noise(half, NoiseSpec::awgn(s25), rng, 20) == apply_noise(half, NoiseSpec::awgn(s25), rng, 20);
    checks.push_back(make("apply_noise deterministic", repeat));
  }
  {
    const auto ramp = NoiseSchedule::linear_ramp(NoiseSpec::awgn(s25), NoiseSpec::awgn(50.0 / 255.0), 0, 300);
    const bool ramp_ok = std::abs(schedule_eval(ramp, 0).sigma - s25) < 1e-12 &&
                         std::abs(schedule_eval(ramp, 150).sigma - 37.5 / 255.0) < 1e-12 &&
                         std::abs(schedule_eval(ramp, 400).sigma - 50.0 / 255.0) < 1e-12;
    checks.push_back(make("ramp schedule", ramp_ok));
    const auto sw = NoiseSchedule::switch_at(NoiseSpec::awgn(50.0 / 255.0), NoiseSpec::salt_pepper(0.25), 200);
    checks.push_back(make("switch schedule", schedule_eval(sw, 199).kind == NoiseKind::kAwgn &&
                                                 schedule_eval(sw, 200).kind == NoiseKind::kSaltPepper));
  }
  return checks;
}

}  // namespace f2f::testing
