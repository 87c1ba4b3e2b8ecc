// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
// The learning criteria train full desk-scale sweeps and take tens of minutes
// on one core. Results are left under $DEA_ACCEPTANCE_DIR (default: a
// directory in the system temp dir) for inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dea/approx.hpp"
#include "dea/artifacts.hpp"
#include "dea/directional.hpp"
#include "dea/ensemble.hpp"
#include "dea/env.hpp"
#include "dea/metrics.hpp"
#include "dea/policy.hpp"
#include "dea/replay.hpp"
#include "dea/trainer.hpp"

namespace fs = std::filesystem;
using namespace dea;
using approx::Matrix;
using approx::Vector;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::printf("%s %02d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

Outcome degenerate_aggregation() {
  const auto t0 = Clock::now();
  Rng rng(101);
  std::normal_distribution<double> n(0.0, 10.0);
  double worst_min = 0.0, worst_mean = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const std::vector<double> q{n(rng), n(rng)};
    worst_min = std::max(worst_min, std::abs(ensemble::aggregate(q, ensemble::Directional{-0.5}) -
                                             ensemble::aggregate(q, ensemble::MinAll{})));
    worst_mean = std::max(worst_mean, std::abs(ensemble::aggregate(q, ensemble::Directional{0.0}) -
                                               ensemble::aggregate(q, ensemble::Mean{})));
  }
  const double secs = seconds_since(t0);
  return {worst_min < 1e-12 && worst_mean < 1e-12 && secs < 1.0,
          fmt("max |dir(-0.5)-min| = %.3g, max |dir(0)-mean| = %.3g, %.3f s", worst_min, worst_mean, secs)};
}

Outcome sign_gradients() {
  const auto t0 = Clock::now();
  Rng rng(202);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> pos(0.1, 2.0), unit(0.0, 1.0), kap(-0.9, 0.9);
  const double h = 1e-6;
  double worst = 0.0;
  int batches = 0;
  while (batches < 100) {
    const int b = 16 + batches % 48;
    ensemble::BatchComponents c;
    c.gamma = 0.99;
    c.alpha = unit(rng);
    c.reward.resize(b);
    c.target_mean.resize(b);
    c.target_delta.resize(b);
    c.next_log_prob.resize(b);
    c.active_mean.resize(b);
    c.active_delta.resize(b);
    const double kb = kap(rng), k = kap(rng);
    for (int j = 0; j < b; ++j) {
      c.reward(j) = unit(rng);
      c.target_mean(j) = 3.0 * n(rng);
      c.target_delta(j) = pos(rng);
      c.next_log_prob(j) = n(rng);
      c.active_mean(j) = 3.0 * n(rng);
      c.active_delta(j) = pos(rng);
    }
    const auto e = directional::residuals(c, kb, k);
    // Keep batches with no residual close enough to zero to flip sign under h.
    if (std::any_of(e.begin(), e.end(), [](double v) { return std::abs(v) < 1e-4; })) continue;
    const double g_bar = directional::kappa_bar_gradient(e, c.gamma);
    const double g = directional::kappa_gradient(e);
    const double fd_bar =
        (directional::target_side_loss(c, kb + h, k) - directional::target_side_loss(c, kb - h, k)) / (2 * h);
    const double fd = (directional::actor_side_loss(c, kb, k + h) - directional::actor_side_loss(c, kb, k - h)) / (2 * h);
    // A zero closed-form gradient is compared absolutely.
    auto err = [](double fd_value, double closed) {
      return closed == 0.0 ? std::abs(fd_value) : std::abs(fd_value - closed) / std::abs(closed);
    };
    worst = std::max({worst, err(fd_bar, g_bar), err(fd, g)});
    ++batches;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-4 && secs < 5.0, fmt("%d batches, max rel. err %.3g, %.3f s", batches, worst, secs)};
}

Outcome disagreement_axioms() {
  Rng rng(303);
  std::normal_distribution<double> n(0.0, 4.0);
  std::uniform_int_distribution<int> size(2, 12);
  double worst = 0.0;
  bool sign_ok = true, zero_ok = true;
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> q(static_cast<std::size_t>(size(rng)));
    for (double& v : q) v = n(rng);
    const double d = ensemble::disagreement(q);
    sign_ok = sign_ok && d >= 0.0;
    zero_ok = zero_ok && d > 0.0;  // continuous draws are distinct
    const double c = n(rng);
    auto shifted = q, scaled = q;
    for (double& v : shifted) v += c;
    for (double& v : scaled) v *= c;
    worst = std::max(worst, std::abs(ensemble::disagreement(shifted) - d) / (1.0 + d));
    worst = std::max(worst, std::abs(ensemble::disagreement(scaled) - std::abs(c) * d) / (1.0 + std::abs(c) * d));
    const std::vector<double> equal(q.size(), c);
    zero_ok = zero_ok && ensemble::disagreement(equal) == 0.0;
  }
  return {sign_ok && zero_ok && worst < 1e-12,
          fmt("10000 vectors, nonneg %s, zero iff equal %s, max invariance err %.3g", sign_ok ? "yes" : "no",
              zero_ok ? "yes" : "no", worst)};
}

Outcome network_gradients() {
  std::normal_distribution<double> n;
  double worst = 0.0;
  int nets = 0;
  for (int t = 0; t < 20; ++t) {
    Rng rng(400 + t);
    std::uniform_int_distribution<int> w(2, 7);
    const int in = w(rng), out = 1 + w(rng) % 3;
    std::vector<int> hidden(static_cast<std::size_t>(1 + t % 3));
    for (int& h : hidden) h = w(rng);
    approx::Mlp net(in, hidden, out, rng);
    Matrix x(in, 6), y(out, 6);
    for (auto& v : x.reshaped()) v = n(rng);
    for (auto& v : y.reshaped()) v = n(rng);
    auto loss = [&] { return (net.forward(x) - y).squaredNorm() / 6.0; };
    const auto g = approx::mlp_gradient(net, x, [&](const Matrix& o) { return Matrix(2.0 * (o - y) / 6.0); });
    const double h = 1e-5;
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      auto probe = [&](double& p, double analytic) {
        const double keep = p;
        p = keep + h;
        const double up = loss();
        p = keep - h;
        const double down = loss();
        p = keep;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(fd - analytic) / std::max(1e-6, std::abs(fd) + std::abs(analytic)));
      };
      auto& L = net.layers()[l];
      for (Eigen::Index i = 0; i < L.weight.size(); ++i) probe(L.weight.data()[i], g.layers[l].weight.data()[i]);
      for (Eigen::Index i = 0; i < L.bias.size(); ++i) probe(L.bias(i), g.layers[l].bias(i));
    }
    ++nets;
  }
  return {nets == 20 && worst < 1e-4, fmt("%d networks, max rel. err %.3g", nets, worst)};
}

RunConfig desk(Method m, const std::string& env) {
  RunConfig c;
  c.regime = lookup_regime("desk-interactive");
  c.warmup_steps = c.regime.default_warmup;
  c.method = m;
  c.env = env;
  return c;
}

Outcome accounting_and_determinism(const fs::path& root) {
  const auto t0 = Clock::now();
  RunConfig c = desk(Method::kDea, "pendulum");
  c.regime.total_steps = c.warmup_steps + 2000;
  const auto a = train(c, root / "determinism_a");
  const auto b = train(c, root / "determinism_b");
  const long utd = c.regime.utd;
  const auto& k = a.counters;
  const bool counts = k.post_warmup_steps == 2000 && k.critic_updates == 2000 * utd && k.actor_updates == 2000 &&
                      k.alpha_updates == 2000 && k.kappa_bar_updates == 2000 && k.kappa_updates == 2000;
  const bool same = slurp(root / "determinism_a" / "metrics.csv") == slurp(root / "determinism_b" / "metrics.csv") &&
                    slurp(root / "determinism_a" / "kappa.csv") == slurp(root / "determinism_b" / "kappa.csv");
  const double secs = seconds_since(t0);
  return {counts && same && secs < 60.0,
          fmt("critic %ld, actor %ld, alpha %ld, kappa_bar %ld, kappa %ld; CSVs identical %s; %.1f s", k.critic_updates,
              k.actor_updates, k.alpha_updates, k.kappa_bar_updates, k.kappa_updates, same ? "yes" : "no", secs)};
}

Outcome frozen_equivalence() {
  RunConfig sac = desk(Method::kSac, "pendulum");
  sac.regime.total_steps = sac.warmup_steps + 1000;
  RunConfig dea = sac;
  dea.method = Method::kDea;
  dea.kappa_bar_init = -0.5;
  dea.kappa_init = -0.5;
  dea.freeze_kappa_bar = true;
  dea.freeze_kappa = true;

  struct Trace {
    std::vector<Vector> y, agg, q;
  };
  auto record = [](Trainer& t, Trace& tr) {
    t.set_target_observer([&](long, const Vector& y, const ensemble::BatchComponents& c) {
      tr.y.push_back(y);
      tr.agg.push_back(c.target_aggregate);
    });
    t.set_actor_observer([&](long, const Vector& q) { tr.q.push_back(q); });
    t.run();
  };
  Trainer a(sac), b(dea);
  Trace ta, tb;
  record(a, ta);
  record(b, tb);
  long mismatches = 0, compared = 0;
  const bool sizes = ta.y.size() == tb.y.size() && ta.q.size() == tb.q.size() && !ta.y.empty();
  for (std::size_t i = 0; sizes && i < ta.y.size(); ++i) {
    mismatches += (ta.y[i].array() != tb.y[i].array()).count() + (ta.agg[i].array() != tb.agg[i].array()).count();
    compared += 2 * ta.y[i].size();
  }
  for (std::size_t i = 0; sizes && i < ta.q.size(); ++i) {
    mismatches += (ta.q[i].array() != tb.q[i].array()).count();
    compared += ta.q[i].size();
  }
  const bool curves = a.evaluations().size() == b.evaluations().size() &&
                      a.evaluations().back().mean_return == b.evaluations().back().mean_return;
  return {sizes && mismatches == 0 && curves,
          fmt("%ld target/actor values compared, %ld differ; final returns equal %s", compared, mismatches,
              curves ? "yes" : "no")};
}

Outcome bandit_regression() {
  const auto spec = env::make_spec("pendulum");
  Rng rng(707);
  replay::ReplayBuffer buf(64, spec.obs_dim, spec.act_dim);
  env::Env e(spec);
  auto obs = e.reset(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (buf.size() < buf.capacity()) {
    std::vector<double> a{u(rng)};
    const auto r = e.step(a);
    buf.push({obs, a, r.reward, r.observation});
    obs = r.truncated ? e.reset(rng) : r.observation;
  }
  RunConfig c;
  auto critics = ensemble::make_ensemble(2, spec.obs_dim, spec.act_dim, c.hidden_sizes(), rng);
  const auto actor = policy::make_actor(spec.obs_dim, spec.act_dim, c.hidden_sizes(), rng);
  // Full-batch regression: every step sees the whole frozen buffer.
  std::vector<std::size_t> all(buf.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto full = buf.gather(all);
  Rng noise_rng(2);
  for (int k = 0; k < 10000; ++k) {
    const Vector y = ensemble::critic_target(full, critics, actor, c.alpha_init, 0.0, ensemble::Mean{}, noise_rng);
    ensemble::critic_update(critics, full, y, c.lr);
  }
  const Vector mean_q = ensemble::column_mean(ensemble::q_values(critics.active, full.s, full.a));
  const double max_err = (mean_q - full.r).cwiseAbs().maxCoeff();
  const double mean_err = (mean_q - full.r).cwiseAbs().mean();
  return {max_err < 1e-3, fmt("%zu stored transitions, 10000 steps: max |mean Q - r| = %.3g (mean %.3g)", buf.size(), max_err, mean_err)};
}

Outcome entropy_direction() {
  double worst = 0.0;
  const double lr = 0.1;
  for (int act_dim : {1, 2, 6}) {
    RunConfig c;
    const double target = c.target_entropy(act_dim);
    for (double offset : {-1.0, 1.0}) {
      auto st = policy::make_alpha_state(c.alpha_init, target, lr);
      const double before = st.log_alpha;
      const std::vector<double> lp(64, -(target + offset));
      policy::alpha_update(st, lp);
      const double expected = -lr * offset;
      worst = std::max(worst, std::abs((st.log_alpha - before) - expected));
    }
  }
  return {worst < 1e-12, fmt("max |delta log alpha -/+ lr| = %.3g", worst)};
}

// ---------------------------------------------------------------------------

Outcome directional_drift(const fs::path& root, const std::vector<std::uint64_t>& seeds) {
  long negative = 0, logged = 0;
  int kappa_up = 0;
  std::string per_seed;
  for (std::uint64_t s : seeds) {
    const fs::path p = root / artifacts::run_dir_name("pendulum", "dea", s) / "kappa.csv";
    if (!fs::exists(p)) return {false, "missing " + p.string()};
    const auto log = artifacts::read_kappa_csv(p);
    long neg = 0;
    for (const auto& r : log) neg += r.kappa_bar < 0.0;
    negative += neg;
    logged += static_cast<long>(log.size());
    const double final_kappa = log.empty() ? std::nan("") : log.back().kappa;
    kappa_up += final_kappa >= 0.0;
    per_seed += fmt(" [seed %llu: kappa_bar<0 %.1f%%, final kappa %.4f]", static_cast<unsigned long long>(s),
                    100.0 * neg / std::max<long>(1, static_cast<long>(log.size())), final_kappa);
  }
  const double frac = static_cast<double>(negative) / std::max<long>(1, logged);
  return {frac >= 0.8 && kappa_up >= 4,
          fmt("kappa_bar<0 on %.1f%% of %ld logged steps, final kappa >= 0 in %d/%zu seeds;", 100.0 * frac, logged,
              kappa_up, seeds.size()) +
              per_seed};
}

Outcome desk_learning(const std::vector<artifacts::SummaryRow>& rows) {
  for (const auto& r : rows) {
    if (r.status != "ok") return {false, "run " + r.env + "/" + r.method + "/" + std::to_string(r.seed) + " " + r.status};
  }
  std::vector<double> sac_final, dea_final;
  for (const auto& r : rows) {
    if (r.env != "pendulum") continue;
    if (r.method == "sac") sac_final.push_back(r.final_return);
    if (r.method == "dea") dea_final.push_back(r.final_return);
  }
  const double sac = metrics::mean(sac_final), dea = metrics::mean(dea_final);
  const double threshold = 0.9 * sac;

  std::map<std::string, double> avg_rank;
  for (const auto& row : artifacts::build_report_rows(rows)) {
    if (row.env != "ALL") continue;
    avg_rank[row.method] = (row.rank_final + row.rank_iqm + row.rank_aulc) / 3.0;
  }
  const bool returns_ok = dea >= threshold;
  const bool rank_ok = avg_rank["dea"] <= avg_rank["sac"] && avg_rank["dea"] <= avg_rank["redq"];
  return {returns_ok && rank_ok,
          fmt("pendulum final return dea %.2f vs threshold %.2f (0.9 x sac %.2f); avg rank dea %.3f, sac %.3f, redq %.3f",
              dea, threshold, sac, avg_rank["dea"], avg_rank["sac"], avg_rank["redq"])};
}

}  // namespace

// Usage: acceptance [--only 1,2,...]
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::string(argv[i]) != "--only") {
      std::fprintf(stderr, "usage: %s [--only 1,2,...]\n", argv[0]);
      return 2;
    }
    std::stringstream list(argv[i + 1]);
    for (std::string item; std::getline(list, item, ',');) only.push_back(std::stoi(item));
  }
  auto wanted = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  auto check = [&](int id, const std::string& name, const std::function<Outcome()>& f) {
    if (wanted(id)) report(id, name, f());
  };

  const char* env_dir = std::getenv("DEA_ACCEPTANCE_DIR");
  const fs::path root = env_dir != nullptr ? fs::path(env_dir) : fs::temp_directory_path() / "dea_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);

  check(1, "aggregation degenerate cases", [&] { return degenerate_aggregation(); });
  check(2, "sign-gradient equivalence", [&] { return sign_gradients(); });
  check(3, "disagreement axioms", [&] { return disagreement_axioms(); });
  check(4, "network gradient oracle", [&] { return network_gradients(); });
  check(5, "update accounting and determinism", [&] { return accounting_and_determinism(root); });
  check(6, "equivalence under freezing", [&] { return frozen_equivalence(); });
  check(7, "zero-discount bandit regression", [&] { return bandit_regression(); });

  check(10, "entropy-tuning direction law", [] { return entropy_direction(); });
  if (!wanted(8) && !wanted(9)) {
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
  }

  // Desk-interactive sweep shared by the two learning criteria.
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  const fs::path sweep_root = root / "desk-interactive";
  const auto t0 = Clock::now();
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto rows = sweep(desk(Method::kDea, "pendulum"),
                          SweepSpec{{"pendulum", "pointreach"}, {Method::kSac, Method::kRedq, Method::kDea}, seeds},
                          sweep_root, static_cast<int>(hw), &std::cerr);
  std::fprintf(stderr, "desk-interactive sweep: %zu runs in %.0f s under %s\n", rows.size(), seconds_since(t0),
               sweep_root.string().c_str());
  try {
    artifacts::write_report({sweep_root}, root / "report");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "report: %s\n", e.what());
  }

  check(8, "directional drift", [&] { return directional_drift(sweep_root, seeds); });
  check(9, "desk-scale learning", [&] { return desk_learning(rows); });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
