// Acceptance suite: one PASS/FAIL line per primary criterion. Exit status is
// the number of failed criteria.

#include "raqst/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace raqst;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double time_limit_s; // 0 = no limit
    std::function<Outcome()> check;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

const HermitianBasis& basis2() { return two_qubit_toolkit().basis; }

RealVector theta_of(const DensityMatrix& rho) { return state_to_bloch(rho, basis2()).theta; }

std::vector<RegressionRecord> random_stream(Rng& rng, int length) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<RegressionRecord> out;
    for (int i = 0; i < length; ++i) {
        RealVector g(15);
        for (int k = 0; k < 15; ++k) g(k) = 0.5 * normal(rng);
        out.push_back(RegressionRecord{1.0, g, unit(rng), 100, 50.0 + 2000.0 * unit(rng)});
    }
    return out;
}

// Support enumeration: the optimum is v_i - t on some support S, 0 elsewhere.
RealVector simplex_oracle(const RealVector& v) {
    const int n = static_cast<int>(v.size());
    RealVector best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int mask = 1; mask < (1 << n); ++mask) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                sum += v(i);
                ++count;
            }
        const double t = (sum - 1.0) / count;
        RealVector x = RealVector::Zero(n);
        bool feasible = true;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) {
                x(i) = v(i) - t;
                feasible = feasible && x(i) >= -1e-15;
            }
        if (feasible && (x - v).squaredNorm() < best_dist) {
            best_dist = (x - v).squaredNorm();
            best = x;
        }
    }
    return best;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log10(x[i]), ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double mean_infidelity(ProtocolKind p, const DensityMatrix& rho, std::int64_t n, int reps, std::uint64_t seed) {
    return monte_carlo(p, rho, {n}, reps, seed).front().mean_infidelity;
}

constexpr std::uint64_t kSeed = 1000;

Outcome recursive_equals_batch() {
    Rng rng = make_rng(kSeed);
    std::uniform_int_distribution<int> len(10, 200);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto recs = random_stream(rng, len(rng));
        const auto rec = absorb(EstimatorState::prior(4), recs);
        const auto bat = batch_lre(recs, 4);
        worst = std::max(worst, (rec.theta_hat - bat.theta_hat).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-9, "max |theta_rec - theta_batch| = " + fmt("%.3g", worst)};
}

Outcome projection_oracle() {
    Rng rng = make_rng(kSeed);
    std::normal_distribution<double> normal;
    double worst = 0.0, worst_comm = 0.0;
    for (int k = 0; k < 100; ++k) {
        ComplexMatrix g(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) g(i, j) = cdouble(normal(rng), normal(rng));
        ComplexMatrix mu = 0.4 * hermitian_part(g);
        mu += ComplexMatrix::Identity(4, 4) * ((1.0 - mu.trace().real()) / 4.0);
        const DensityMatrix rho = project_to_physical(mu);

        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(mu);
        const RealVector lam = simplex_oracle(es.eigenvalues());
        const ComplexMatrix expected = es.eigenvectors() * lam.cast<cdouble>().asDiagonal() * es.eigenvectors().adjoint();
        worst = std::max(worst, (rho.matrix() - expected).cwiseAbs().maxCoeff());
        worst_comm = std::max(worst_comm, (mu * rho.matrix() - rho.matrix() * mu).cwiseAbs().maxCoeff());
    }
    return {worst < 1e-10 && worst_comm < 1e-10,
            "max deviation from oracle = " + fmt("%.3g", worst) + ", max |[mu, rho]| = " + fmt("%.3g", worst_comm)};
}

double max_cross_overlap_defect(const MeasurementCatalog& cat) {
    double worst = 0.0;
    for (std::size_t a = 0; a < cat.size(); ++a)
        for (std::size_t b = a + 1; b < cat.size(); ++b)
            for (const auto& e : cat[a].effects)
                for (const auto& f : cat[b].effects)
                    worst = std::max(worst, std::abs(trace_product(e.effect, f.effect) - 0.25));
    return worst;
}

Outcome mub_contract() {
    double worst = max_cross_overlap_defect(two_qubit_toolkit().mub);
    Rng rng = make_rng(kSeed);
    for (int k = 0; k < 50; ++k) {
        const DensityMatrix rho = k % 2 ? random_pure_state(rng) : random_mes(rng);
        worst = std::max(worst, max_cross_overlap_defect(rotate_mub_to_basis(rho, basis2())));
    }
    return {worst < 1e-12, "max | |<e|f>|^2 - 1/4 | = " + fmt("%.3g", worst)};
}

Outcome static_scaling() {
    const std::vector<double> ns{100, 1000, 10000};
    bool pass = true;
    std::string detail;
    for (auto p : {ProtocolKind::Cube, ProtocolKind::Mub}) {
        std::vector<double> means;
        for (double n : ns) means.push_back(mean_infidelity(p, singlet(), static_cast<std::int64_t>(n), 100, kSeed));
        const double slope = log_log_slope(ns, means);
        pass = pass && slope >= -0.6 && slope <= -0.4;
        detail += to_string(p) + " slope " + fmt("%.3f", slope) + " (" + fmt("%.4g", means[0]) + ", " +
                  fmt("%.4g", means[1]) + ", " + fmt("%.4g", means[2]) + ")  ";
    }
    return {pass, detail};
}

Outcome beats_gill_massar() {
    const double gm = gill_massar_bound(4, 10000);
    const double r2 = mean_infidelity(ProtocolKind::Raqst2, singlet(), 10000, 200, kSeed);
    const double r1 = mean_infidelity(ProtocolKind::Raqst1, singlet(), 10000, 200, kSeed);
    const double mub = mean_infidelity(ProtocolKind::Mub, singlet(), 10000, 200, kSeed);
    return {r2 < gm && r1 < mub, "raqst2 " + fmt("%.4g", r2) + " vs GM " + fmt("%.4g", gm) + "; raqst1 " +
                                     fmt("%.4g", r1) + " vs mub " + fmt("%.4g", mub)};
}

Outcome purity_crossover() {
    bool pass = true;
    std::string detail;
    for (double p : {0.2, 0.3, 0.4, 0.6, 0.8, 0.9, 0.95, 0.98, 0.997, 1.0}) {
        const DensityMatrix rho = werner_state(p);
        const double pur = purity(rho);
        if (pur > 0.4 && pur < 0.95) continue;
        const double mub = mean_infidelity(ProtocolKind::Mub, rho, 10000, 200, kSeed);
        const double r1 = mean_infidelity(ProtocolKind::Raqst1, rho, 10000, 200, kSeed);
        const bool ok = pur >= 0.95 ? r1 < mub : mub <= 1.1 * r1;
        pass = pass && ok;
        detail += "P=" + fmt("%.4f", pur) + (ok ? "" : "[x]") + " mub/raqst1=" + fmt("%.3f", mub / r1) + "  ";
    }
    return {pass, detail};
}

Outcome product_search() {
    Rng rng = make_rng(kSeed);
    std::normal_distribution<double> normal;
    long violations = 0;
    double max_rise = 0.0;
    for (int k = 0; k < 10000; ++k) {
        RealVector theta;
        switch (k % 4) {
        case 0: theta = theta_of(random_pure_state(rng)); break;
        case 1: theta = theta_of(random_mes(rng)); break;
        case 2: theta = theta_of(werner_state(std::uniform_real_distribution<double>(0, 1)(rng))); break;
        default:
            theta = RealVector(15);
            for (int i = 0; i < 15; ++i) theta(i) = 0.3 * normal(rng);
        }
        try {
            const auto r = min_prob_product_projector(theta);
            for (const auto& trace : r.objective_traces)
                for (std::size_t i = 1; i < trace.size(); ++i) {
                    const double rise = trace[i] - trace[i - 1];
                    max_rise = std::max(max_rise, rise);
                    // Rounding allowance at the fixed point.
                    violations += rise > 1e-12 * std::max(1.0, std::abs(trace[i - 1]));
                }
        } catch (const std::logic_error&) {
            ++violations;
        }
    }
    const double singlet_min = min_prob_product_projector(theta_of(singlet())).p_min;

    // Grid oracle: 10^4 Fibonacci-sphere points for x; L is linear in y, so the
    // y minimum at each x is exact.
    const int points = 10000;
    double worst_gap = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10; ++k) {
        const RealVector theta = theta_of(k % 2 ? random_pure_state(rng) : random_mes(rng));
        const detail::ProductObjective obj(product_coordinate_matrix(theta));
        double grid = std::numeric_limits<double>::infinity();
        for (int i = 0; i < points; ++i) {
            const double z = 1.0 - 2.0 * (i + 0.5) / points;
            const double phi = i * M_PI * (3.0 - std::sqrt(5.0));
            const Eigen::Vector3d x =
                Eigen::Vector3d(std::sqrt(1 - z * z) * std::cos(phi), std::sqrt(1 - z * z) * std::sin(phi), z) /
                std::sqrt(2.0);
            const Eigen::Vector3d c = obj.pb / std::sqrt(2.0) + obj.pd * x;
            grid = std::min(grid, 0.25 + obj.pa.dot(x) / std::sqrt(2.0) - c.norm() / std::sqrt(2.0));
        }
        worst_gap = std::max(worst_gap, min_prob_product_projector(theta).p_min - grid);
    }
    return {violations == 0 && singlet_min <= 1e-6 && worst_gap <= 1e-8,
            "monotonicity violations " + std::to_string(violations) + " in 10^4 runs (max rise " +
                fmt("%.2g", max_rise) + "); singlet p_min " +
                fmt("%.3g", singlet_min) + "; max (L - grid) " + fmt("%.3g", worst_gap)};
}

Outcome upsilon_behaviour() {
    const auto mes = upsilon_study(StateClass::Mes, 20, ProtocolKind::Raqst2, 10000, 50, kSeed, 1);
    const auto pure = upsilon_study(StateClass::Pure, 20, ProtocolKind::Raqst2, 10000, 50, kSeed, 1);
    auto summary = [](const UpsilonStudy& s, int& positive) {
        double sum = 0.0;
        positive = 0;
        for (const auto& r : s.rows) {
            sum += r.upsilon.value_or(0.0);
            positive += r.upsilon.value_or(0.0) > 0.0;
        }
        return sum / static_cast<double>(s.rows.size());
    };
    int pos_mes = 0, pos_pure = 0;
    const double m_mes = summary(mes, pos_mes);
    const double m_pure = summary(pure, pos_pure);
    const bool pass = pos_mes >= 18 && m_mes > m_pure;
    return {pass, "raqst2: MES positive " + std::to_string(pos_mes) + "/20, mean Upsilon MES " + fmt("%.4f", m_mes) +
                      " vs pure " + fmt("%.4f", m_pure) + " (pure positive " + std::to_string(pos_pure) + "/20)"};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    const auto root = std::filesystem::temp_directory_path() / "raqst_acceptance_determinism";
    std::filesystem::remove_all(root);
    std::vector<std::string> sweeps = {
        "experiment = sweep_n\nreps = 10\nstate = singlet\nseed = 1000\n",
        "experiment = sweep_purity\nprotocols = mub, raqst1\nreps = 10\nn_list = 3162\nwerner_p = 0.3, 0.9\n",
        "experiment = histogram\nn_states = 3\nreps = 4\nn_list = 3162\n"};
    bool pass = true;
    std::size_t compared = 0;
    for (std::size_t s = 0; s < sweeps.size(); ++s) {
        std::vector<std::string> outputs;
        for (int workers : {1, 4, 1}) {
            RunConfig cfg = build_config(parse_config_text(sweeps[s]));
            cfg.workers = workers;
            cfg.out_dir = root / ("run" + std::to_string(s) + "_" + std::to_string(outputs.size()));
            const RunOutputs out = run_experiment(cfg);
            write_outputs(cfg, out);
            const char* csv = cfg.experiment == Experiment::Histogram ? "upsilon.csv" : "results.csv";
            outputs.push_back(slurp(cfg.out_dir / csv) + slurp(cfg.out_dir / "trials.jsonl"));
        }
        for (const auto& o : outputs) {
            pass = pass && o == outputs.front() && !o.empty();
            ++compared;
        }
    }
    std::filesystem::remove_all(root);
    return {pass, std::to_string(sweeps.size()) + " sweeps x {1, 4, 1} workers, " + std::to_string(compared) +
                      " outputs byte-compared"};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"recursive update equals batch solve", 5.0, recursive_equals_batch},
        {"projection matches simplex oracle", 5.0, projection_oracle},
        {"MUB unbiasedness incl. rotated", 0.0, mub_contract},
        {"static protocols scale as 1/sqrt(N)", 0.0, static_scaling},
        {"RAQST beats Gill-Massar bound on singlet", 0.0, beats_gill_massar},
        {"purity crossover against MUB", 0.0, purity_crossover},
        {"product-projector search", 0.0, product_search},
        {"Upsilon index on MES vs pure states", 0.0, upsilon_behaviour},
        {"byte-identical reruns across worker counts", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.check();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && secs >= c.time_limit_s) {
            out.pass = false;
            out.detail += "; exceeded " + fmt("%.0f", c.time_limit_s) + " s";
        }
        failed += !out.pass;
        std::printf("[%s] %s: %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
