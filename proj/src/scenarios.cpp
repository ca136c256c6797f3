#include "lpsim/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "lpsim/csv.hpp"
#include "lpsim/decoherence.hpp"
#include "lpsim/errors.hpp"
#include "lpsim/evolution.hpp"
#include "lpsim/friedrichs.hpp"
#include "lpsim/scattering.hpp"

namespace lpsim {

namespace {

using Keys = std::vector<std::string>;

const Keys kCommon = {"scenario", "seed", "output.dir"};
const Keys kGrid = {"grid.t_min", "grid.t_max", "grid.n_points", "aux.dim"};
const Keys kKappa = {"kappa.family", "kappa.lambda", "kappa.width", "kappa.center",
                     "kappa.edge",   "kappa.smooth", "kappa.aux_op"};

Keys join(std::initializer_list<Keys> parts) {
    Keys out;
    for (const Keys& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

// Library errors raised while turning config values into model objects are
// configuration problems; convergence failures keep their own exit code.
template <class F>
auto validated(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const ConvergenceError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid scenario parameters: ") + e.what());
    }
}

class Context {
public:
    Context(const Config& cfg, ScenarioReport& rep) : cfg(cfg), rng(rep.seed), rep_(rep) {}

    const Config& cfg;

    void at_most(const std::string& name, double measured, double bound) {
        add(name, measured, "<=", bound * rep_.tolerance_scale, measured <= bound * rep_.tolerance_scale);
    }
    void at_most_fixed(const std::string& name, double measured, double bound) {
        add(name, measured, "<=", bound, measured <= bound);
    }
    void below_fixed(const std::string& name, double measured, double bound) {
        add(name, measured, "<", bound, measured < bound);
    }
    void above_fixed(const std::string& name, double measured, double bound) {
        add(name, measured, ">", bound, measured > bound);
    }
    void at_least_fixed(const std::string& name, double measured, double bound) {
        add(name, measured, ">=", bound, measured >= bound);
    }
    void equals(const std::string& name, double measured, double expected) {
        add(name, measured, "==", expected, measured == expected);
    }

    void write(const std::string& file, const CsvWriter& csv) {
        const std::string path = (std::filesystem::path(rep_.out_dir) / file).string();
        csv.save(path);
        rep_.files.push_back(path);
    }

    double tolerance_scale() const { return rep_.tolerance_scale; }

    std::mt19937_64 rng;

    CVector gaussian_vector(Eigen::Index n) {
        std::normal_distribution<double> nd(0.0, 1.0);
        CVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double re = nd(rng);
            const double im = nd(rng);
            v[i] = cplx(re, im);
        }
        return v;
    }

    CMatrix hermitian_matrix(int d) {
        std::normal_distribution<double> nd(0.0, 1.0);
        CMatrix x(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const double re = nd(rng);
                const double im = nd(rng);
                x(i, j) = cplx(re, im);
            }
        }
        return 0.5 * (x + x.adjoint());
    }

private:
    void add(const std::string& name, double measured, const char* rel, double bound, bool ok) {
        rep_.checks.push_back({name, measured, rel, bound, ok});
    }

    ScenarioReport& rep_;
};

// "start:stop:count" (inclusive linspace) or a comma-separated list.
std::vector<double> schedule(const Config& cfg, const std::string& key) {
    const std::string text = cfg.get_text(key);
    const int line = cfg.line_of(key);
    if (text.empty()) throw ConfigError("key '" + key + "': tau schedule is empty", line);
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::string compact = text;
        compact.erase(std::remove_if(compact.begin(), compact.end(), [](char c) { return c == ' ' || c == '\t'; }),
                      compact.end());
        std::istringstream in(compact);
        for (std::string item; std::getline(in, item, ':');) {
            Config tmp;
            tmp.set("v", item);
            try {
                parts.push_back(tmp.get_double("v"));
            } catch (const ConfigError&) {
                throw ConfigError("key '" + key + "': expected start:stop:count", line);
            }
        }
        if (parts.size() != 3 || parts[2] < 1 || parts[2] != std::floor(parts[2])) {
            throw ConfigError("key '" + key + "': expected start:stop:count", line);
        }
        const auto count = static_cast<std::size_t>(parts[2]);
        for (std::size_t i = 0; i < count; ++i) {
            out.push_back(count == 1 ? parts[0]
                                     : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) /
                                                      static_cast<double>(count - 1));
        }
    } else {
        out = cfg.get_list(key);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] >= 0.0) || !std::isfinite(out[i])) throw ConfigError("key '" + key + "': tau values must be >= 0", line);
        if (i > 0 && !(out[i] > out[i - 1])) throw ConfigError("key '" + key + "': tau values must ascend", line);
    }
    return out;
}

// Snaps a schedule to lattice multiples of h; off-lattice values are errors.
std::vector<double> lattice_schedule(const Config& cfg, const std::string& key, double h) {
    std::vector<double> out = schedule(cfg, key);
    for (double& t : out) {
        const double r = std::round(t / h);
        if (std::abs(t / h - r) > 1e-9 * std::max(1.0, r)) {
            throw ConfigError("key '" + key + "': tau values must be multiples of the grid spacing", cfg.line_of(key));
        }
        t = r * h;
    }
    return out;
}

long positive_count(const Config& cfg, const std::string& key) {
    const long v = cfg.get_int(key);
    if (v < 1) throw ConfigError("key '" + key + "' must be >= 1", cfg.line_of(key));
    return v;
}

TimeGrid read_grid(const Config& cfg) {
    const long n = cfg.get_int("grid.n_points");
    if (n < 1) throw ConfigError("grid.n_points must be positive", cfg.line_of("grid.n_points"));
    return validated([&] {
        return TimeGrid(cfg.get_double("grid.t_min"), cfg.get_double("grid.t_max"), static_cast<std::size_t>(n));
    });
}

AuxSpace read_aux(const Config& cfg) {
    const long d = cfg.get_int("aux.dim");
    return validated([&] { return AuxSpace(static_cast<int>(d)); });
}

SubspaceLayout read_layout(const Config& cfg, const TimeGrid& grid) {
    return validated([&] { return SubspaceLayout(grid, cfg.get_double("layout.rho")); });
}

KappaSpec read_kappa(const Config& cfg, const AuxSpace& aux) {
    KappaSpec spec;
    const std::string fam = cfg.get_string("kappa.family");
    if (fam == "none") {
        spec.family = KappaFamily::none;
    } else if (fam == "separable") {
        spec.family = KappaFamily::separable;
    } else if (fam == "banded") {
        spec.family = KappaFamily::banded;
    } else if (fam == "diagonal") {
        spec.family = KappaFamily::diagonal;
    } else {
        throw ConfigError("kappa.family must be one of none, separable, banded, diagonal", cfg.line_of("kappa.family"));
    }
    spec.lambda = cfg.get_double("kappa.lambda");
    spec.width = cfg.get_double("kappa.width");
    spec.center = cfg.get_double("kappa.center");
    spec.edge = cfg.get_double("kappa.edge");
    spec.smooth = cfg.get_double("kappa.smooth");
    if (cfg.get_string("kappa.aux_op") != "identity") {
        spec.aux_op = cfg.get_matrix("kappa.aux_op");
        if (spec.aux_op.rows() != aux.dimension) {
            throw ConfigError("kappa.aux_op must be aux.dim x aux.dim", cfg.line_of("kappa.aux_op"));
        }
    }
    return spec;
}

GeneratorK read_generator(const SubspaceLayout& layout, const AuxSpace& aux, const KappaSpec& spec) {
    return validated([&] {
        GeneratorK K(layout.grid(), aux, make_kappa(layout, aux, spec));
        check_kernel_constraint(K, layout);
        return K;
    });
}

CMatrix read_hermitian(const Config& cfg, const std::string& key, int d) {
    const CMatrix m = cfg.get_matrix(key);
    if (m.rows() != d) throw ConfigError("key '" + key + "' must be aux.dim x aux.dim", cfg.line_of(key));
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
        throw ConfigError("key '" + key + "' must be symmetric", cfg.line_of(key));
    }
    return m;
}

void survival_rows(CsvWriter& csv, const std::vector<double>& t, const std::vector<cplx>& a,
                   const std::vector<cplx>& b) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        csv.row({t[i], a[i].real(), a[i].imag(), std::norm(a[i]), b[i].real(), b[i].imag(), std::abs(a[i] - b[i])});
    }
}

// ---------------------------------------------------------------- survival

Keys survival_flat_keys() { return join({kCommon, {"model.e0", "model.gamma", "tau.schedule"}}); }

void survival_flat(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const double e0 = cfg.get_double("model.e0");
    const double gamma = cfg.get_double("model.gamma");
    const std::vector<double> t = schedule(cfg, "tau.schedule");
    const FriedrichsModel model = validated([&] { return FriedrichsModel(e0, Coupling::flat(gamma)); });

    const ResonancePole pole = find_resonance_pole(model);
    const std::vector<cplx> a = survival_curve(model, t, SurvivalMethod::spectral_quadrature);
    const std::vector<cplx> b = survival_curve(model, t, SurvivalMethod::pole_plus_background);

    CsvWriter csv({"t", "re_A", "im_A", "p", "A_pole_re", "A_pole_im", "method_diff"});
    survival_rows(csv, t, a, b);
    ctx.write("survival.csv", csv);

    double err_a = 0.0, err_b = 0.0, agree = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const cplx exact = std::exp(cplx(-0.5 * gamma * t[i], -e0 * t[i]));
        err_a = std::max(err_a, std::abs(a[i] - exact));
        err_b = std::max(err_b, std::abs(b[i] - exact));
        agree = std::max(agree, std::abs(a[i] - b[i]));
    }
    CsvWriter pc({"pole_re", "pole_im", "residue_re", "residue_im", "iterations"});
    pc.row({pole.position.real(), pole.position.imag(), pole.residue.real(), pole.residue.imag(),
            static_cast<double>(pole.iterations)});
    ctx.write("pole.csv", pc);

    ctx.at_most("closed_form_error_spectral", err_a, 1e-6);
    ctx.at_most("closed_form_error_pole", err_b, 1e-6);
    ctx.at_most("method_agreement", agree, 1e-6);
    ctx.at_most("pole_error", std::abs(pole.position - cplx(e0, -0.5 * gamma)), 1e-8);
}

Keys survival_threshold_keys() {
    return join({kCommon, {"model.e0", "model.lambda", "model.omega_c", "tau.schedule", "tail.t_start", "tail.t_stop"}});
}

void survival_threshold(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const double e0 = cfg.get_double("model.e0");
    const double lambda = cfg.get_double("model.lambda");
    const double wc = cfg.get_double("model.omega_c");
    const std::vector<double> t = schedule(cfg, "tau.schedule");
    const double t0 = cfg.get_double("tail.t_start");
    const double t1 = cfg.get_double("tail.t_stop");
    if (!(t0 > 0.0) || !(t1 > t0)) throw ConfigError("tail window needs 0 < tail.t_start < tail.t_stop", cfg.line_of("tail.t_stop"));
    const FriedrichsModel model = validated([&] { return FriedrichsModel(e0, Coupling::half_line_sqrt(lambda, wc)); });

    const ResonancePole pole = find_resonance_pole(model);
    const std::vector<cplx> a = survival_curve(model, t, SurvivalMethod::spectral_quadrature);
    const std::vector<cplx> b = survival_curve(model, t, SurvivalMethod::pole_plus_background);
    CsvWriter csv({"t", "re_A", "im_A", "p", "A_pole_re", "A_pole_im", "method_diff"});
    survival_rows(csv, t, a, b);
    ctx.write("survival.csv", csv);
    double agree = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) agree = std::max(agree, std::abs(a[i] - b[i]));

    // Short times: 1 - p(t) ~ t^2 needs t well below the inverse bandwidth 1 / omega_c.
    std::vector<double> ts, ys, tl, yl;
    for (int i = 0; i < 20; ++i) ts.push_back(1e-3 / wc * std::pow(100.0, i / 19.0));
    for (const cplx& z : survival_curve(model, ts, SurvivalMethod::spectral_quadrature)) ys.push_back(1.0 - std::norm(z));
    for (int i = 0; i < 15; ++i) tl.push_back(t0 * std::pow(t1 / t0, i / 14.0));
    for (const cplx& z : survival_curve(model, tl, SurvivalMethod::pole_plus_background)) yl.push_back(std::abs(z));
    const double short_slope = loglog_slope(ts, ys);
    const double tail_slope = loglog_slope(tl, yl);

    CsvWriter win({"window", "t", "value"});
    for (std::size_t i = 0; i < ts.size(); ++i) win.row({0.0, ts[i], ys[i]});
    for (std::size_t i = 0; i < tl.size(); ++i) win.row({1.0, tl[i], yl[i]});
    ctx.write("windows.csv", win);

    const double oracle = -std::numbers::pi * model.coupling().density(e0);
    CsvWriter pc({"pole_re", "pole_im", "residue_re", "residue_im", "perturbative_im", "short_slope", "tail_slope"});
    pc.row({pole.position.real(), pole.position.imag(), pole.residue.real(), pole.residue.imag(), oracle, short_slope,
            tail_slope});
    ctx.write("pole.csv", pc);

    ctx.at_most("method_agreement", agree, 1e-6);
    ctx.at_most("pole_vs_perturbative_rel", std::abs(pole.position.imag() - oracle) / std::abs(oracle), 0.1);
    ctx.at_most("short_slope_minus_2", std::abs(short_slope - 2.0), 0.05);
    ctx.at_most("tail_slope_plus_1.5", std::abs(tail_slope + 1.5), 0.2);
    ctx.at_least_fixed("tail_decades", std::log10(t1 / t0), 1.0);
}

// ---------------------------------------------------------------- evolution

Keys semigroup_keys() {
    return join({kCommon, kGrid, {"layout.rho"}, kKappa,
                 {"tau.schedule", "probes.pairs", "probes.dissipativity", "probes.contraction"}});
}

void semigroup_audit(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const TimeGrid grid = read_grid(cfg);
    const AuxSpace aux = read_aux(cfg);
    const SubspaceLayout layout = read_layout(cfg, grid);
    const KappaSpec spec = read_kappa(cfg, aux);
    const double h = grid.spacing();
    const double rho = layout.rho();
    const std::vector<double> taus = lattice_schedule(cfg, "tau.schedule", h);
    const long pairs = positive_count(cfg, "probes.pairs");
    const long n_diss = positive_count(cfg, "probes.dissipativity");
    const long n_contr = positive_count(cfg, "probes.contraction");
    // Beyond t_max - t_min - rho the periodic wrap re-enters the K-subspace.
    const double horizon = grid.length() - rho;
    if (!(2.0 * rho <= horizon + 1e-12)) {
        throw ConfigError("semigroup audit needs t_max - t_min >= 3 rho (periodic wrap horizon)", cfg.line_of("layout.rho"));
    }
    if (taus.back() > horizon) throw ConfigError("tau.schedule exceeds the wrap horizon t_max - t_min - rho", cfg.line_of("tau.schedule"));
    const GeneratorK K = read_generator(layout, aux, spec);
    if (layout.nodes(SubspaceLayout::Part::k_subspace).empty()) throw ConfigError("layout.rho leaves the K-subspace empty", cfg.line_of("layout.rho"));

    const LaxPhillipsSystem sys(K, layout);
    const Eigen::Index nk = sys.k_dimension();

    // Semigroup law on lattice pairs a, b in (0, rho].
    const long max_steps = std::max(1L, static_cast<long>(std::floor(rho / h + 1e-9)));
    std::uniform_int_distribution<long> steps(1, max_steps);
    CsvWriter sg({"a", "b", "residual"});
    double worst_law = 0.0;
    for (long i = 0; i < pairs; ++i) {
        const double a = static_cast<double>(steps(ctx.rng)) * h;
        const double b = static_cast<double>(steps(ctx.rng)) * h;
        const double r = semigroup_residual(sys, a, b);
        worst_law = std::max(worst_law, r);
        sg.row({a, b, r});
    }
    ctx.write("semigroup.csv", sg);

    const CMatrix& B = sys.semigroup_generator();
    CsvWriter ds({"trial", "defect"});
    double worst_diss = -std::numeric_limits<double>::infinity();
    for (long i = 0; i < n_diss; ++i) {
        CVector phi = ctx.gaussian_vector(nk);
        phi /= std::sqrt(phi.squaredNorm() * h);
        const double dfc = dissipativity_defect(B, phi, h);
        worst_diss = std::max(worst_diss, dfc);
        ds.row({static_cast<double>(i), dfc});
    }
    ctx.write("dissipativity.csv", ds);

    CsvWriter ct({"probe", "tau", "norm"});
    double worst_rise = 0.0, worst_reduction = 0.0, free_at_rho = 0.0;
    for (long p = 0; p < n_contr; ++p) {
        CVector psi = ctx.gaussian_vector(nk);
        psi /= std::sqrt(psi.squaredNorm() * h);
        const std::vector<double> prof = contraction_profile(sys, psi, taus);
        for (std::size_t i = 0; i < taus.size(); ++i) {
            ct.row({static_cast<double>(p), taus[i], prof[i]});
            if (i > 0) worst_rise = std::max(worst_rise, prof[i] - prof[i - 1]);
        }
        // Reduction identity (psi, U psi) = (psi, Z psi) on the schedule.
        const LpVector full = sys.embed(psi);
        for (double tau : taus) {
            const cplx lhs = full.flat().dot(sys.group().apply(tau, full.flat())) * h;
            const cplx rhs = psi.dot(sys.apply_semigroup(tau, psi)) * h;
            worst_reduction = std::max(worst_reduction, std::abs(lhs - rhs));
        }
        if (spec.family == KappaFamily::none) {
            free_at_rho = std::max(free_at_rho, std::sqrt(sys.apply_semigroup(rho, psi).squaredNorm() * h));
        }
    }
    ctx.write("contraction.csv", ct);

    const CVector ev = generator_spectrum(sys);
    std::vector<cplx> sorted(ev.data(), ev.data() + ev.size());
    std::sort(sorted.begin(), sorted.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    CsvWriter sp({"re", "im"});
    double max_im = -std::numeric_limits<double>::infinity();
    for (const cplx& z : sorted) {
        sp.row({z.real(), z.imag()});
        max_im = std::max(max_im, z.imag());
    }
    ctx.write("spectrum.csv", sp);

    // Smooth probes vanishing at the K boundaries for (Z(d) - I)/(-i d) -> B.
    std::vector<CVector> smooth;
    const auto& knodes = layout.nodes(SubspaceLayout::Part::k_subspace);
    const double sd = rho / 10.0;
    for (int p = 0; p < 3; ++p) {
        CVector phi = CVector::Zero(nk);
        for (std::size_t i = 0; i < knodes.size(); ++i) {
            const double tt = grid.point(knodes[i]);
            const double env = std::exp(-(tt - 0.5 * rho) * (tt - 0.5 * rho) / (2.0 * sd * sd));
            for (int a = 0; a < aux.dimension; ++a) {
                phi[static_cast<Eigen::Index>(i) * aux.dimension + a] = env * std::exp(cplx(0.0, (p + 1) * tt + a));
            }
        }
        smooth.push_back(phi);
    }
    const double c_coarse = generator_consistency(sys, smooth, 1e-2, false);
    const double c_fine = generator_consistency(sys, smooth, 1e-3, false);
    const double c_rich = generator_consistency(sys, smooth, 1e-3, true);
    CsvWriter gc({"delta", "raw", "richardson"});
    gc.row({1e-2, c_coarse, generator_consistency(sys, smooth, 1e-2, true)});
    gc.row({1e-3, c_fine, c_rich});
    ctx.write("generator_consistency.csv", gc);

    ctx.at_most("kernel_constraint", kernel_constraint_violation(K, layout), 1e-14);
    ctx.at_most("semigroup_residual", worst_law, 1e-6);
    ctx.at_most("dissipativity_max_defect", worst_diss, 1e-12);
    ctx.at_most("contraction_max_rise", worst_rise, 1e-10);
    ctx.at_most("reduction_identity", worst_reduction, 1e-10);
    ctx.at_most("spectrum_max_im", max_im, 1e-10);
    ctx.at_most("generator_consistency_richardson", c_rich, 1e-4);
    if (spec.family == KappaFamily::none) ctx.equals("free_norm_at_rho", free_at_rho, 0.0);
}

// ---------------------------------------------------------------- scattering

Keys smatrix_keys() {
    return join({kCommon, kGrid, {"layout.rho"}, kKappa,
                 {"smatrix.tau_max", "smatrix.window_lo", "smatrix.window_hi", "continuation.im_cap", "sweep.lambda"}});
}

struct SMatrixSetup {
    TimeGrid grid;
    AuxSpace aux;
    SubspaceLayout layout;
    KappaSpec spec;
    double tau_max;
    SMatrixOptions opts;
};

SMatrixSetup read_smatrix_setup(const Config& cfg, double tolerance_scale) {
    const TimeGrid grid = read_grid(cfg);
    const AuxSpace aux = read_aux(cfg);
    SMatrixSetup s{grid, aux, read_layout(cfg, grid), read_kappa(cfg, aux), cfg.get_double("smatrix.tau_max"), {}};
    s.opts.window_lo = cfg.get_double("smatrix.window_lo");
    s.opts.window_hi = cfg.get_double("smatrix.window_hi");
    s.opts.reference_t = s.opts.window_hi - 1.0;
    s.opts.gap_tolerance = 1e-6 * tolerance_scale;
    if (!(s.opts.window_lo >= grid.t_min()) || !(s.opts.window_hi <= 0.0) || s.opts.window_hi - s.opts.window_lo < 6.0) {
        throw ConfigError("smatrix window must lie in D- (t_min <= lo, hi <= 0) and span at least 6",
                          cfg.line_of("smatrix.window_lo"));
    }
    const double m = s.tau_max / grid.spacing();
    if (!(s.tau_max > 0.0) || std::abs(m - std::round(m)) > 1e-9 * m) {
        throw ConfigError("smatrix.tau_max must be a positive multiple of the grid spacing", cfg.line_of("smatrix.tau_max"));
    }
    return s;
}

std::vector<LpVector> window_probes(const SMatrixSetup& s, double shrink_hi = 0.0) {
    return gaussian_probes(s.grid, s.aux, s.opts.window_lo + 2.0, s.opts.window_hi - 2.0 - shrink_hi);
}

void smatrix_poles(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const SMatrixSetup s = read_smatrix_setup(cfg, ctx.tolerance_scale());
    const double im_cap = cfg.get_double("continuation.im_cap");
    if (!(im_cap > 0.0)) throw ConfigError("continuation.im_cap must be positive", cfg.line_of("continuation.im_cap"));
    std::vector<double> sweep = cfg.get_list("sweep.lambda");
    std::sort(sweep.begin(), sweep.end());
    const GeneratorK K = read_generator(s.layout, s.aux, s.spec);

    const LaxPhillipsSystem sys(K, s.layout);
    const SMatrix S = s_matrix(K, sys.group(), s.tau_max, s.opts);
    ContinuationOptions copts;
    copts.im_cap = im_cap;
    copts.seed = ctx.rng();
    SingularityReport rep = continue_and_locate_singularities(S, copts);
    match_eigenvalues(rep, generator_spectrum(sys));

    const std::vector<std::size_t> band = S.resolved_band();
    const RVector sigma = s.grid.sigma();
    const Eigen::VectorXcd det = S.determinant_band();
    CsvWriter dc({"sigma", "re_det", "im_det", "abs_det"});
    for (std::size_t i = 0; i < band.size(); ++i) {
        const cplx v = det[static_cast<Eigen::Index>(i)];
        dc.row({sigma[static_cast<Eigen::Index>(band[i])], v.real(), v.imag(), std::abs(v)});
    }
    ctx.write("det_spectrum.csv", dc);

    CsvWriter sc({"re", "im", "residue_re", "residue_im", "confidence_radius"});
    for (const Singularity& z : rep.singularities) {
        sc.row({z.position.real(), z.position.imag(), z.residue.real(), z.residue.imag(), z.confidence_radius});
    }
    ctx.write("singularities.csv", sc);
    CsvWriter ec({"re", "im"});
    for (const cplx& z : rep.eigenvalues) ec.row({z.real(), z.imag()});
    ctx.write("eigenvalues.csv", ec);
    CsvWriter mc({"sing_re", "sing_im", "eig_re", "eig_im", "distance", "tolerance"});
    double worst_ratio = 0.0;
    for (const MatchedPair& m : rep.matches) {
        const double tol = 1e-2 * std::abs(m.eigenvalue.imag());
        mc.row({m.singularity.real(), m.singularity.imag(), m.eigenvalue.real(), m.eigenvalue.imag(), m.distance, tol});
        worst_ratio = std::max(worst_ratio, m.distance / std::abs(m.eigenvalue.imag()));
    }
    ctx.write("matches.csv", mc);

    // Negative control on the same grid.
    const GeneratorK K0 = GeneratorK::free(s.grid, s.aux);
    const SMatrix S0 = s_matrix(K0, UnitaryGroup(K0), s.tau_max, s.opts);
    const SingularityReport rep0 = continue_and_locate_singularities(S0, copts);

    // Pole position against the coupling strength.
    CsvWriter sw({"lambda", "pole_re", "pole_im", "eig_re", "eig_im"});
    std::vector<double> sweep_im;
    for (double lam : sweep) {
        KappaSpec ks = s.spec;
        ks.lambda = lam;
        const GeneratorK Kl = read_generator(s.layout, s.aux, ks);
        const LaxPhillipsSystem sl(Kl, s.layout);
        const SMatrix Sl = s_matrix(Kl, sl.group(), s.tau_max, s.opts);
        SingularityReport rl = continue_and_locate_singularities(Sl, copts);
        match_eigenvalues(rl, generator_spectrum(sl));
        if (rl.matches.empty()) throw ConvergenceError("no matched resonance at sweep lambda " + format_double(lam));
        const MatchedPair& best = *std::min_element(rl.matches.begin(), rl.matches.end(), [](const auto& x, const auto& y) {
            return std::abs(x.eigenvalue.imag()) < std::abs(y.eigenvalue.imag());
        });
        sw.row({lam, best.singularity.real(), best.singularity.imag(), best.eigenvalue.real(), best.eigenvalue.imag()});
        sweep_im.push_back(std::abs(best.singularity.imag()));
    }
    ctx.write("sweep.csv", sw);

    const std::vector<LpVector> probes = window_probes(s);
    const double shift = 4.0 * s.grid.spacing();
    ctx.at_most("convergence_gap", S.convergence_gap, 1e-6);
    ctx.at_most("unitarity_defect", S.unitarity_defect(), 1e-6);
    ctx.at_most("stationarity_defect", stationarity_defect(S, probes), 1e-6);
    ctx.at_most("intertwining_defect", intertwining_defect(S, window_probes(s, shift), shift), 1e-6);
    ctx.equals("fit_converged", rep.fit_converged ? 1.0 : 0.0, 1.0);
    ctx.at_least_fixed("matched_pairs", static_cast<double>(rep.matches.size()), 1.0);
    ctx.equals("unmatched_eigenvalues", static_cast<double>(rep.unmatched_eigenvalues.size()), 0.0);
    ctx.equals("unmatched_singularities", static_cast<double>(rep.unmatched_singularities.size()), 0.0);
    ctx.at_most("match_distance_over_im", worst_ratio, 1e-2);
    ctx.equals("control_singularities", static_cast<double>(rep0.singularities.size()), 0.0);
    if (sweep_im.size() >= 2) {
        double violations = 0.0;
        for (std::size_t i = 1; i < sweep_im.size(); ++i) {
            if (!(sweep_im[i] < sweep_im[i - 1])) violations += 1.0;
        }
        ctx.equals("sweep_monotonicity_violations", violations, 0.0);
    }
}

void smatrix_diagonal(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const SMatrixSetup s = read_smatrix_setup(cfg, ctx.tolerance_scale());
    if (s.spec.family != KappaFamily::diagonal) {
        throw ConfigError("smatrix-diagonal needs kappa.family = diagonal", cfg.line_of("kappa.family"));
    }
    const GeneratorK K = read_generator(s.layout, s.aux, s.spec);
    const SMatrix S = s_matrix(K, s.tau_max, s.opts);
    const int d = s.aux.dimension;
    std::vector<std::string> header{"sigma"};
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            header.push_back("s" + std::to_string(a) + std::to_string(b) + "_re");
            header.push_back("s" + std::to_string(a) + std::to_string(b) + "_im");
        }
    }
    CsvWriter csv(header);
    const RVector sigma = s.grid.sigma();
    for (std::size_t r : S.resolved_band()) {
        std::vector<double> row{sigma[static_cast<Eigen::Index>(r)]};
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                row.push_back(S.spectral[r](a, b).real());
                row.push_back(S.spectral[r](a, b).imag());
            }
        }
        csv.row(row);
    }
    ctx.write("s_hat.csv", csv);
    ctx.at_most("convergence_gap", S.convergence_gap, 1e-6);
    ctx.at_most("unitarity_defect", S.unitarity_defect(), 1e-6);
    ctx.at_most("sigma_variation", S.sigma_variation(), 1e-6);
    ctx.at_most("stationarity_defect", stationarity_defect(S, window_probes(s)), 1e-6);
}

Keys smatrix_diagonal_keys() {
    return join({kCommon, kGrid, {"layout.rho"}, kKappa, {"smatrix.tau_max", "smatrix.window_lo", "smatrix.window_hi"}});
}

Keys superselection_keys() { return join({kCommon, kGrid, {"layout.rho", "probes.count"}}); }

void superselection(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const TimeGrid grid = read_grid(cfg);
    const AuxSpace aux = read_aux(cfg);
    const SubspaceLayout layout = read_layout(cfg, grid);
    const long count = positive_count(cfg, "probes.count");
    const auto n = static_cast<Eigen::Index>(grid.size());
    const int d = aux.dimension;

    CsvWriter csv({"trial", "global", "d_minus", "k_part", "d_plus", "cross_terms", "residual"});
    double worst_cross = 0.0, worst_res = 0.0;
    for (long i = 0; i < count; ++i) {
        const CVector v = ctx.gaussian_vector(n * d);
        LpVector psi = LpVector::from_flat(grid, aux, v);
        psi.values() /= psi.norm();
        CMatrix A = ctx.hermitian_matrix(d);
        A /= A.cwiseAbs().maxCoeff();
        const SuperselectionReport r = superselection_check(layout, psi, A);
        worst_cross = std::max(worst_cross, r.cross_terms);
        worst_res = std::max(worst_res, r.residual);
        csv.row({static_cast<double>(i), r.global.real(), r.d_minus.real(), r.k_part.real(), r.d_plus.real(),
                 r.cross_terms, r.residual});
    }
    ctx.write("superselection.csv", csv);

    // A state living in D+ only.
    LpVector plus = layout.project(LpVector::from_flat(grid, aux, ctx.gaussian_vector(n * d)), SubspaceLayout::Part::d_plus);
    double d_plus_only = 0.0;
    if (plus.norm() > 0.0) {
        const SuperselectionReport r = superselection_check(layout, plus, CMatrix::Identity(d, d));
        d_plus_only = std::abs(r.global - r.d_plus) + std::abs(r.d_minus) + std::abs(r.k_part);
    }
    // An operator coupling different t-fibres must be refused.
    bool refused = false;
    try {
        CMatrix full = CMatrix::Identity(n * d, n * d);
        full(0, d) = full(d, 0) = 0.5;
        superselection_check_full(layout, LpVector::from_flat(grid, aux, ctx.gaussian_vector(n * d)), full);
    } catch (const ContractViolation&) {
        refused = true;
    }
    ctx.at_most("cross_terms", worst_cross, 1e-12);
    ctx.at_most("decomposition_residual", worst_res, 1e-12);
    ctx.at_most("d_plus_only_mismatch", d_plus_only, 1e-12);
    ctx.equals("non_decomposable_refused", refused ? 1.0 : 0.0, 1.0);
}

// ---------------------------------------------------------------- decoherence

Keys decoherence_keys() {
    return join({kCommon, kGrid,
                 {"hamiltonian.before", "hamiltonian.after", "hamiltonian.t_switch", "state.center", "state.width",
                  "state.phi0", "tau.schedule", "probes.count"}});
}

void decoherence_switch(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const TimeGrid grid = read_grid(cfg);
    const AuxSpace aux = read_aux(cfg);
    const int d = aux.dimension;
    const CMatrix h_before = read_hermitian(cfg, "hamiltonian.before", d);
    const CMatrix h_after = read_hermitian(cfg, "hamiltonian.after", d);
    const double t_switch = cfg.get_double("hamiltonian.t_switch");
    const double center = cfg.get_double("state.center");
    const double width = cfg.get_double("state.width");
    const std::vector<double> phi_in = cfg.get_list("state.phi0");
    const std::vector<double> taus = lattice_schedule(cfg, "tau.schedule", grid.spacing());
    const long count = positive_count(cfg, "probes.count");
    if (static_cast<int>(phi_in.size()) != d) throw ConfigError("state.phi0 needs aux.dim entries", cfg.line_of("state.phi0"));
    if (!(width > 0.0)) throw ConfigError("state.width must be positive", cfg.line_of("state.width"));
    CVector phi0(d);
    for (int a = 0; a < d; ++a) phi0[a] = phi_in[static_cast<std::size_t>(a)];
    if (phi0.norm() == 0.0) throw ConfigError("state.phi0 must be nonzero", cfg.line_of("state.phi0"));
    phi0.normalize();
    const auto stationary = validated([&] { return TimeDependentHamiltonian::constant(grid, h_before); });
    const auto switching = validated([&] { return TimeDependentHamiltonian::switching(grid, h_before, h_after, t_switch); });

    const auto n = static_cast<Eigen::Index>(grid.size());
    CMatrix v(n, d);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double x = (grid.point(static_cast<std::size_t>(k)) - center) / width;
        v.row(k) = std::exp(-0.5 * x * x) * phi0.transpose();
    }
    LpVector psi(grid, aux, std::move(v));
    psi.values() /= psi.norm();

    CsvWriter csv({"tau", "purity_stationary", "purity_switching", "norm_switching", "pure_stationary", "pure_switching"});
    double stat_dev = 0.0, norm_dev = 0.0, trace_dev = 0.0, bound_viol = 0.0, final_purity = 1.0;
    double stationary_mixed = 0.0;
    for (double tau : taus) {
        const LpVector a = nonstationary_evolve(psi, stationary, tau);
        const LpVector b = nonstationary_evolve(psi, switching, tau);
        const ReducedDensity ra = reduce(a), rb = reduce(b);
        const double pa = purity(ra), pb = purity(rb);
        const bool ea = effectively_pure_check(a).effectively_pure;
        const bool eb = effectively_pure_check(b).effectively_pure;
        stat_dev = std::max(stat_dev, std::abs(1.0 - pa));
        norm_dev = std::max({norm_dev, std::abs(a.norm() - 1.0), std::abs(b.norm() - 1.0)});
        trace_dev = std::max(trace_dev, std::abs(rb.matrix().trace() - 1.0));
        for (double p : {pa, pb}) bound_viol = std::max({bound_viol, p - 1.0 - 1e-12, 1.0 / d - 1e-12 - p});
        if (!ea) stationary_mixed += 1.0;
        final_purity = pb;
        csv.row({tau, pa, pb, b.norm(), ea ? 1.0 : 0.0, eb ? 1.0 : 0.0});
    }
    ctx.write("purity.csv", csv);

    // Chain property W_{t+a}(b) W_t(a) = W_t(a+b) on random nodes and lattice steps.
    std::uniform_int_distribution<long> node(0, static_cast<long>(n) - 1), step(0, static_cast<long>(n) / 2);
    double chain = 0.0;
    const double h = grid.spacing();
    for (int i = 0; i < 20; ++i) {
        const long k = node(ctx.rng), sa = step(ctx.rng), sb = step(ctx.rng);
        const CMatrix lhs = fibre_propagator(switching, static_cast<std::size_t>((k + sa) % n), sb * h) *
                            fibre_propagator(switching, static_cast<std::size_t>(k), sa * h);
        chain = std::max(chain, (lhs - fibre_propagator(switching, static_cast<std::size_t>(k), (sa + sb) * h)).cwiseAbs().maxCoeff());
    }

    // Rank test against purity on random states, half of them rank one.
    CsvWriter pc({"trial", "rank_one", "purity", "singular_ratio", "effectively_pure"});
    double disagreements = 0.0;
    for (long i = 0; i < count; ++i) {
        const bool rank_one = i % 2 == 0;
        CMatrix vals(n, d);
        if (rank_one) {
            const CVector f = ctx.gaussian_vector(n);
            const CVector phi = ctx.gaussian_vector(d);
            vals = f * phi.transpose();
        } else {
            for (int a = 0; a < d; ++a) vals.col(a) = ctx.gaussian_vector(n);
        }
        const LpVector s(grid, aux, vals);
        const double p = purity(reduce(s));
        const PurityWitness w = effectively_pure_check(s);
        if (w.effectively_pure != (std::abs(p - 1.0) <= 1e-10)) disagreements += 1.0;
        pc.row({static_cast<double>(i), rank_one ? 1.0 : 0.0, p, w.singular_ratio, w.effectively_pure ? 1.0 : 0.0});
    }
    ctx.write("pure_check.csv", pc);

    ctx.at_most("stationary_purity_deviation", stat_dev, 1e-10);
    ctx.equals("stationary_mixed_steps", stationary_mixed, 0.0);
    ctx.below_fixed("switching_final_purity", final_purity, 0.99);
    ctx.at_most("norm_deviation", norm_dev, 1e-12);
    ctx.at_most("trace_deviation", trace_dev, 1e-12);
    ctx.at_most_fixed("purity_bound_violation", bound_viol, 0.0);
    ctx.at_most("chain_property", chain, 1e-12);
    ctx.equals("pure_check_disagreements", disagreements, 0.0);
}

Keys liouville_keys() { return join({kCommon, kGrid, {"model.h0", "model.v"}}); }

void liouville(Context& ctx) {
    const Config& cfg = ctx.cfg;
    const TimeGrid grid = read_grid(cfg);
    const AuxSpace aux = read_aux(cfg);
    const int d = aux.dimension;
    const CMatrix H0 = read_hermitian(cfg, "model.h0", d);
    const CMatrix V = read_hermitian(cfg, "model.v", d);
    const LiouvilleKernel L = validated([&] { return liouville_kernel(H0, V, grid); });
    // A perturbation commuting with H0 serves as the control.
    const CMatrix Vc = H0 * H0 + 0.5 * H0;
    const LiouvilleKernel Lc = liouville_kernel(H0, Vc, grid);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(H0, Eigen::EigenvaluesOnly);
    std::vector<double> diffs;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) diffs.push_back(es.eigenvalues()[i] - es.eigenvalues()[j]);
    }
    std::sort(diffs.begin(), diffs.end());
    const RVector spec = L.l0_spectrum();
    CsvWriter sc({"index", "eigenvalue", "expected"});
    double spec_err = 0.0;
    for (Eigen::Index i = 0; i < spec.size(); ++i) {
        sc.row({static_cast<double>(i), spec[i], diffs[static_cast<std::size_t>(i)]});
        spec_err = std::max(spec_err, std::abs(spec[i] - diffs[static_cast<std::size_t>(i)]));
    }
    ctx.write("l0_spectrum.csv", sc);

    Eigen::SelfAdjointEigenSolver<CMatrix> l0(L.l0);
    const CMatrix M = l0.eigenvectors().adjoint() * L.interaction * l0.eigenvectors();
    CsvWriter mc({"row", "col", "l0_row", "l0_col", "abs"});
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            mc.row({static_cast<double>(i), static_cast<double>(j), l0.eigenvalues()[i], l0.eigenvalues()[j], std::abs(M(i, j))});
        }
    }
    ctx.write("interaction_l0_basis.csv", mc);

    const double comm = (H0 * V - V * H0).cwiseAbs().maxCoeff();
    const double mass = L.interaction_offdiagonal_mass();
    const double mass_c = Lc.interaction_offdiagonal_mass();
    CsvWriter oc({"case", "commutator", "offdiagonal_mass"});
    oc.row({0.0, comm, mass});
    oc.row({1.0, (H0 * Vc - Vc * H0).cwiseAbs().maxCoeff(), mass_c});
    ctx.write("offdiagonal.csv", oc);

    ctx.at_most("self_adjointness", L.self_adjointness_defect(), 1e-12);
    ctx.at_most("self_adjointness_control", Lc.self_adjointness_defect(), 1e-12);
    ctx.at_most("l0_spectrum_error", spec_err, 1e-12);
    ctx.at_most("control_offdiagonal_mass", mass_c, 1e-12);
    ctx.equals("offdiagonal_iff_noncommuting", (mass > 1e-12) == (comm > 1e-12) ? 1.0 : 0.0, 1.0);
}

struct Entry {
    ScenarioInfo info;
    Keys (*keys)();
    void (*run)(Context&);
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> list = {
        {{"survival-flat", "Friedrichs model, flat coupling: survival amplitude vs the exponential closed form"},
         survival_flat_keys, survival_flat},
        {{"survival-threshold", "Friedrichs model, sqrt threshold coupling: pole, t^2 short-time and t^-3/2 tail laws"},
         survival_threshold_keys, survival_threshold},
        {{"semigroup-audit", "Lax-Phillips semigroup: law, dissipativity, contraction and spectrum of B"},
         semigroup_keys, semigroup_audit},
        {{"smatrix-poles", "S-matrix: unitarity, stationarity, continued poles matched to eigenvalues of B"},
         smatrix_keys, smatrix_poles},
        {{"smatrix-diagonal", "S-matrix of a diagonal (local) evolution: sigma-independent S-hat"},
         smatrix_diagonal_keys, smatrix_diagonal},
        {{"superselection", "Per-t operators: expectation splits over D-, K, D+ without cross terms"},
         superselection_keys, superselection},
        {{"decoherence-switch", "Fibre-wise evolution: purity kept by stationary H, lost by a switched H(t)"},
         decoherence_keys, decoherence_switch},
        {{"liouville-kernel", "Liouville-space kernel: self-adjointness and off-diagonal interaction mass"},
         liouville_keys, liouville},
    };
    return list;
}

}  // namespace

const std::vector<ScenarioInfo>& scenario_registry() {
    static const std::vector<ScenarioInfo> infos = [] {
        std::vector<ScenarioInfo> out;
        for (const Entry& e : entries()) out.push_back(e.info);
        return out;
    }();
    return infos;
}

std::string scenario_listing() {
    std::size_t width = 0;
    for (const ScenarioInfo& s : scenario_registry()) width = std::max(width, s.name.size());
    std::string out;
    for (const ScenarioInfo& s : scenario_registry()) {
        out += s.name + std::string(width + 2 - s.name.size(), ' ') + s.description + '\n';
    }
    return out;
}

bool ScenarioReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const InvariantCheck& c) { return c.passed; });
}

std::string ScenarioReport::text() const {
    std::string out = "scenario " + scenario + "\nseed " + std::to_string(seed) + "\ntolerance_scale " +
                      format_double(tolerance_scale) + "\n";
    for (const InvariantCheck& c : checks) {
        out += std::string(c.passed ? "PASS " : "FAIL ") + c.name + " measured=" + format_double(c.measured) + " " +
               c.relation + " " + format_double(c.bound) + "\n";
    }
    out += std::string("verdict ") + (passed() ? "PASS" : "FAIL") + "\n";
    return out;
}

ScenarioReport run_scenario(const Config& cfg_in, const RunOptions& opts) {
    Config cfg = cfg_in;
    const std::string name = cfg.get_string("scenario");
    const auto& list = entries();
    const auto it = std::find_if(list.begin(), list.end(), [&](const Entry& e) { return e.info.name == name; });
    if (it == list.end()) {
        std::string valid;
        for (const Entry& e : list) valid += (valid.empty() ? "" : ", ") + e.info.name;
        throw ConfigError("unknown scenario '" + name + "'; valid: " + valid, cfg.line_of("scenario"));
    }
    if (opts.out_dir) cfg.set("output.dir", *opts.out_dir);
    if (opts.seed) cfg.set("seed", std::to_string(*opts.seed));
    cfg.require_exactly(it->keys());
    if (!(opts.tolerance_scale > 0.0) || !std::isfinite(opts.tolerance_scale)) {
        throw ConfigError("tolerance scale must be a positive number");
    }

    ScenarioReport rep;
    rep.scenario = name;
    rep.seed = cfg.get_u64("seed");
    rep.tolerance_scale = opts.tolerance_scale;
    rep.out_dir = cfg.get_string("output.dir");
    std::error_code ec;
    std::filesystem::create_directories(rep.out_dir, ec);
    if (ec || !std::filesystem::is_directory(rep.out_dir)) {
        throw ConfigError("cannot create output directory " + rep.out_dir, cfg.line_of("output.dir"));
    }
    Context ctx(cfg, rep);
    it->run(ctx);
    const std::string report_path = (std::filesystem::path(rep.out_dir) / "report.txt").string();
    std::ofstream f(report_path, std::ios::binary);
    f << rep.text();
    if (!f) throw Error("cannot write " + report_path);
    rep.files.push_back(report_path);
    return rep;
}

int run_config_file(const std::string& path, const RunOptions& opts, std::ostream& out, std::ostream& err) {
    try {
        const ScenarioReport rep = run_scenario(Config::load(path), opts);
        out << rep.text();
        return rep.passed() ? 0 : 1;
    } catch (const ConfigError& e) {
        err << "config error: " << path << ": " << e.what() << '\n';
        return 2;
    } catch (const ConvergenceError& e) {
        err << "convergence error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace lpsim
