// bbgp command-line front end. Links only the public C API.

#include <bbgp/bbgp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "output.hpp"

namespace {

using cli::Cell;
using cli::ConfigError;
using cli::Null;
using cli::Section;
using cli::Table;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitResource = 4;

// Upper bound on doubles materialized for sample output.
constexpr double kMaxSampleValues = 2.5e8;

struct ApiError {
    bbgp_status status;
    std::string message;
};

struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(bbgp_status status) {
    if (status != BBGP_OK) throw ApiError{status, bbgp_last_error()};
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
    void operator()(T* p) const { Destroy(p); }
};
using Kernel = std::unique_ptr<bbgp_kernel, Deleter<bbgp_kernel, bbgp_kernel_destroy>>;
using Field = std::unique_ptr<bbgp_field, Deleter<bbgp_field, bbgp_field_destroy>>;
using Source = std::unique_ptr<bbgp_source, Deleter<bbgp_source, bbgp_source_destroy>>;
using Posterior = std::unique_ptr<bbgp_posterior, Deleter<bbgp_posterior, bbgp_posterior_destroy>>;
using Sampler = std::unique_ptr<bbgp_sampler, Deleter<bbgp_sampler, bbgp_sampler_destroy>>;
using Inverse = std::unique_ptr<bbgp_inverse_result, Deleter<bbgp_inverse_result, bbgp_inverse_result_destroy>>;
using Convergence =
    std::unique_ptr<bbgp_convergence_report, Deleter<bbgp_convergence_report, bbgp_convergence_report_destroy>>;
using ModelError =
    std::unique_ptr<bbgp_model_error_report, Deleter<bbgp_model_error_report, bbgp_model_error_report_destroy>>;

struct Run {
    json input;
    json resolved = json::object();
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;  // relative dataset paths resolve against the config's directory
};

// ---------------------------------------------------------------------------
// Shared config blocks

struct KernelConfig {
    Kernel kernel;
    int dim = 1;
    int order = 0;
    double beta = 1.0;
};

const std::set<std::string> kKernelKeys{"family", "dim", "order", "beta", "omega", "p"};

KernelConfig read_kernel(Section& root, int default_order_1d = 256) {
    Section k = root.child("kernel", kKernelKeys);
    KernelConfig out;
    const std::string family = k.text("family", "bridge");
    out.dim = static_cast<int>(k.integer("dim", 1));
    out.order = static_cast<int>(k.integer("order", out.dim == 1 ? default_order_1d : (out.dim == 2 ? 32 : 12)));
    out.beta = k.number("beta", 1.0);
    bbgp_kernel_family fam;
    double param = 0.0;
    if (family == "bridge") {
        fam = BBGP_KERNEL_BRIDGE;
        if (k.has("omega") || k.has("p")) throw ConfigError("config keys 'kernel.omega' and 'kernel.p' need another family");
    } else if (family == "helmholtz") {
        fam = BBGP_KERNEL_HELMHOLTZ;
        param = k.number("omega");
        if (k.has("p")) throw ConfigError("config key 'kernel.p' needs family 'power'");
    } else if (family == "power") {
        fam = BBGP_KERNEL_POWER;
        param = k.number("p");
        if (k.has("omega")) throw ConfigError("config key 'kernel.omega' needs family 'helmholtz'");
    } else {
        throw ConfigError("config key 'kernel.family' must be one of bridge, helmholtz, power (got '" + family + "')");
    }
    bbgp_kernel* raw = nullptr;
    check(bbgp_kernel_create(fam, out.dim, out.order, out.beta, param, &raw));
    out.kernel.reset(raw);
    return out;
}

Source make_source(const std::string& text, int dim, const std::vector<double>& theta = {}) {
    bbgp_source* raw = nullptr;
    check(bbgp_source_from_expression(text.c_str(), dim, theta.empty() ? nullptr : theta.data(), theta.size(), &raw));
    return Source(raw);
}

Field solve(const bbgp_source* q, const bbgp_kernel* kernel) {
    bbgp_field* raw = nullptr;
    check(bbgp_solve(q, kernel, &raw));
    return Field(raw);
}

Field project(const bbgp_source* f, int order) {
    bbgp_field* raw = nullptr;
    check(bbgp_field_project(f, order, &raw));
    return Field(raw);
}

std::vector<double> coefficients(const bbgp_field* field) {
    int dim = 0, order = 0;
    std::size_t count = 0;
    check(bbgp_field_size(field, &dim, &order, &count));
    std::vector<double> out(count);
    check(bbgp_field_coefficients(field, out.data(), out.size()));
    return out;
}

/// Tensor grid with `points` nodes per axis including the endpoints; first axis slowest.
std::vector<double> output_grid(Section& root, int dim, std::size_t& npoints) {
    Section g = root.child("grid", {"points"});
    const long long per_axis = g.integer("points", dim == 1 ? 101 : 21);
    if (per_axis < 2) throw ConfigError("config key 'grid.points' must be at least 2");
    npoints = 1;
    for (int a = 0; a < dim; ++a) npoints *= static_cast<std::size_t>(per_axis);
    if (static_cast<double>(npoints) * dim > 1e8) throw ResourceError("output grid is too large");
    std::vector<double> pts(npoints * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < npoints; ++i) {
        std::size_t rest = i;
        for (int a = dim - 1; a >= 0; --a) {
            const std::size_t k = rest % static_cast<std::size_t>(per_axis);
            rest /= static_cast<std::size_t>(per_axis);
            pts[i * dim + a] = static_cast<double>(k) / static_cast<double>(per_axis - 1);
        }
    }
    return pts;
}

std::vector<std::string> coordinate_columns(int dim) {
    if (dim == 1) return {"x"};
    std::vector<std::string> out;
    for (int a = 1; a <= dim; ++a) out.push_back("x" + std::to_string(a));
    return out;
}

bbgp_hyper_prior read_hyper(Section& root) {
    const std::string kind = root.text("hyper", "flat");
    if (kind == "flat") return {BBGP_PRIOR_FLAT, 0.0};
    if (kind == "jeffreys") return {BBGP_PRIOR_JEFFREYS, 0.0};
    if (kind == "fixed") {
        if (!root.has("beta_fixed")) throw ConfigError("config key 'beta_fixed' is required when 'hyper' is 'fixed'");
        return {BBGP_PRIOR_FIXED, root.number("beta_fixed")};
    }
    throw ConfigError("config key 'hyper' must be one of flat, jeffreys, fixed (got '" + kind + "')");
}

void add_estimate(Table& table, const bbgp_beta_estimate& e) {
    table.add_summary("beta", e.beta);
    table.add_summary("objective", e.objective);
    table.add_summary("boundary", static_cast<long long>(e.boundary));
    table.add_summary("dirac_limit", e.dirac_limit != 0);
}

// ---------------------------------------------------------------------------
// Observations: a point dataset (file or synthetic) or observed coefficients

struct Observations {
    bool coefficient_model = false;
    std::vector<double> X;  // n x dim, row-major
    std::vector<double> y;
    std::size_t n = 0;
    std::vector<double> d;  // observed coefficients
    double sigma2 = 0.0;
    std::optional<double> dist_sq;  // |d - c0|^2 in the kernel's unit-beta RKHS norm, coefficient data only
};

std::vector<std::vector<double>> read_csv_rows(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read dataset '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        bool numeric = true;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(field, &used);
                while (used < field.size() && std::isspace(static_cast<unsigned char>(field[used]))) ++used;
                if (used != field.size()) numeric = false;
                row.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (rows.empty()) continue;  // header row
            throw ConfigError("dataset '" + path + "' line " + std::to_string(lineno) + ": non-numeric field");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ConfigError("dataset '" + path + "' line " + std::to_string(lineno) + ": expected " +
                              std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<double> design(const std::string& kind, long long n, int dim, std::uint64_t seed, std::size_t& count) {
    std::vector<double> X;
    if (kind == "uniform") {
        // n interior nodes per axis at i/(n+1)
        count = 1;
        for (int a = 0; a < dim; ++a) count *= static_cast<std::size_t>(n);
        X.resize(count * static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < count; ++i) {
            std::size_t rest = i;
            for (int a = dim - 1; a >= 0; --a) {
                X[i * dim + a] = static_cast<double>(rest % static_cast<std::size_t>(n) + 1) / static_cast<double>(n + 1);
                rest /= static_cast<std::size_t>(n);
            }
        }
        return X;
    }
    if (kind == "random") {
        // splitmix64 stream keyed by the seed, mapped to (0, 1)
        count = static_cast<std::size_t>(n);
        X.resize(count * static_cast<std::size_t>(dim));
        std::uint64_t state = seed ^ 0x6a09e667f3bcc909ULL;
        for (double& v : X) {
            std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            z ^= z >> 31;
            v = (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
        }
        return X;
    }
    throw ConfigError("config key 'data.design' must be uniform or random (got '" + kind + "')");
}

/// Standard normals keyed by (seed, index): draws of a one-mode sampler whose prior variance is 1.
std::vector<double> normals(std::uint64_t seed, std::size_t count) {
    bbgp_kernel* raw = nullptr;
    check(bbgp_kernel_create(BBGP_KERNEL_BRIDGE, 1, 1, 1.0 / (M_PI * M_PI), 0.0, &raw));
    Kernel unit(raw);
    Field zero;
    {
        bbgp_field* f = nullptr;
        check(bbgp_field_create(1, 1, nullptr, &f));
        zero.reset(f);
    }
    bbgp_sampler* s = nullptr;
    check(bbgp_sampler_create(unit.get(), zero.get(), 1, seed, &s));
    Sampler sampler(s);
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        bbgp_field* draw = nullptr;
        check(bbgp_sampler_draw(sampler.get(), i, &draw));
        Field hold(draw);
        double c = 0.0;
        check(bbgp_field_coefficients(draw, &c, 1));
        out[i] = c;  // the single coefficient has variance lambda/beta = 1
    }
    return out;
}

Observations read_observations(Section& root, const KernelConfig& k, const bbgp_field* prior_mean, const Run& run) {
    const std::uint64_t seed = run.seed;
    Section d = root.child("data", {"kind", "path", "truth", "n", "design", "noise_sd", "sigma2", "observed",
                                    "epsilon", "mode", "noise"});
    Observations obs;
    const std::string kind = d.text("kind", "points");
    obs.sigma2 = d.number("sigma2", 1e-8);
    if (kind == "coefficients") {
        obs.coefficient_model = true;
        for (const char* key : {"path", "n", "design", "noise_sd"})
            if (d.has(key)) throw ConfigError(std::string("config key 'data.") + key + "' needs data.kind 'points'");
        const auto observed = static_cast<std::size_t>(d.integer("observed", k.order));
        const std::vector<double> c0 = coefficients(prior_mean);
        if (observed < 1 || observed > c0.size())
            throw ConfigError("config key 'data.observed' must lie in [1, " + std::to_string(c0.size()) + "]");
        std::vector<double> truth;
        if (d.has("truth")) {
            if (d.has("epsilon") || d.has("mode")) throw ConfigError("config keys 'data.truth' and 'data.epsilon' are exclusive");
            Source t = make_source(d.text("truth"), k.dim);
            truth = coefficients(project(t.get(), k.order).get());
        } else {
            const double eps = d.number("epsilon", 0.0);
            const long long mode = d.integer("mode", 1);
            if (mode < 1 || static_cast<std::size_t>(mode) > c0.size())
                throw ConfigError("config key 'data.mode' is out of range");
            truth = c0;
            truth[static_cast<std::size_t>(mode - 1)] += eps;
        }
        obs.d.assign(truth.begin(), truth.begin() + static_cast<std::ptrdiff_t>(observed));
        if (d.boolean("noise", false)) {
            const std::vector<double> xi = normals(seed, observed);
            for (std::size_t i = 0; i < observed; ++i) obs.d[i] += std::sqrt(obs.sigma2) * xi[i];
        }
        std::vector<double> lambda(c0.size());
        check(bbgp_kernel_eigenvalues(k.kernel.get(), lambda.data(), lambda.size()));
        double dist = 0.0;
        for (std::size_t i = 0; i < observed; ++i) {
            const double r = obs.d[i] - c0[i];
            dist += r * r / (lambda[i] * k.beta);  // eigenvalues carry 1/beta
        }
        obs.dist_sq = dist;
        return obs;
    }
    if (kind != "points") throw ConfigError("config key 'data.kind' must be points or coefficients (got '" + kind + "')");
    for (const char* key : {"observed", "epsilon", "mode", "noise"})
        if (d.has(key)) throw ConfigError(std::string("config key 'data.") + key + "' needs data.kind 'coefficients'");
    if (d.has("path")) {
        for (const char* key : {"truth", "n", "design", "noise_sd"})
            if (d.has(key)) throw ConfigError(std::string("config key 'data.") + key + "' conflicts with 'data.path'");
        std::filesystem::path path = d.text("path");
        if (path.is_relative()) path = run.base_dir / path;
        const auto rows = read_csv_rows(path.string());
        if (rows.empty()) throw ConfigError("dataset is empty");
        if (rows.front().size() != static_cast<std::size_t>(k.dim) + 1)
            throw ConfigError("dataset must have " + std::to_string(k.dim + 1) + " columns for dimension " +
                              std::to_string(k.dim));
        obs.n = rows.size();
        for (const auto& r : rows) {
            obs.X.insert(obs.X.end(), r.begin(), r.end() - 1);
            obs.y.push_back(r.back());
        }
        return obs;
    }
    Source truth = make_source(d.text("truth"), k.dim);
    const long long n = d.integer("n", 20);
    if (n < 1) throw ConfigError("config key 'data.n' must be positive");
    obs.X = design(d.text("design", "uniform"), n, k.dim, seed, obs.n);
    obs.y.resize(obs.n);
    check(bbgp_source_eval(truth.get(), obs.X.data(), obs.n, obs.y.data()));
    const double sd = d.number("noise_sd", 0.0);
    if (sd < 0) throw ConfigError("config key 'data.noise_sd' must be non-negative");
    if (sd > 0) {
        const std::vector<double> xi = normals(seed, obs.n);
        for (std::size_t i = 0; i < obs.n; ++i) obs.y[i] += sd * xi[i];
    }
    return obs;
}

// ---------------------------------------------------------------------------
// Commands

Table cmd_solve(Run& run) {
    Section root(run.input, run.resolved, "", {"seed", "kernel", "source", "theta", "grid"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source"), k.dim, root.numbers("theta", {}));
    Field u0 = solve(q.get(), k.kernel.get());
    std::size_t npoints = 0;
    const std::vector<double> pts = output_grid(root, k.dim, npoints);
    std::vector<double> u(npoints);
    check(bbgp_field_eval(u0.get(), pts.data(), npoints, u.data()));

    Table t;
    t.columns = coordinate_columns(k.dim);
    t.columns.push_back("u0");
    for (std::size_t i = 0; i < npoints; ++i) {
        std::vector<Cell> row;
        for (int a = 0; a < k.dim; ++a) row.emplace_back(pts[i * k.dim + a]);
        row.emplace_back(u[i]);
        t.rows.push_back(std::move(row));
    }
    double energy = 0.0;
    check(bbgp_half_source_energy(q.get(), k.kernel.get(), &energy));
    t.add_summary("half_source_energy", energy);
    return t;
}

Table cmd_sample(Run& run) {
    Section root(run.input, run.resolved, "",
                 {"seed", "kernel", "source", "theta", "grid", "draws", "moment_draws", "mesh_size", "betas"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source", "0"), k.dim, root.numbers("theta", {}));
    const long long draws = root.integer("draws", 5);
    const long long moment_draws = root.integer("moment_draws", 10000);
    if (draws < 0) throw ConfigError("config key 'draws' must be non-negative");
    if (moment_draws < 2) throw ConfigError("config key 'moment_draws' must be at least 2");
    std::size_t total_modes = 1;
    for (int a = 0; a < k.dim; ++a) total_modes *= static_cast<std::size_t>(k.order);
    const long long mesh = root.integer("mesh_size", static_cast<long long>(total_modes));
    if (mesh < 1) throw ConfigError("config key 'mesh_size' must be positive");
    const bool sweep = root.has("betas");
    const std::vector<double> betas = root.numbers("betas", {k.beta});
    if (betas.empty()) throw ConfigError("config key 'betas' must not be empty");
    std::size_t npoints = 0;
    const std::vector<double> pts = output_grid(root, k.dim, npoints);
    const long long chunk_draws = std::max(draws, std::min<long long>(moment_draws, 1000));
    if (static_cast<double>(std::max(draws, moment_draws)) > 1e8 ||
        static_cast<double>(chunk_draws) * static_cast<double>(npoints) > kMaxSampleValues)
        throw ResourceError("draw count times grid size exceeds the sample output budget");

    int kdim = 0, korder = 0;
    double kbeta = 0;
    check(bbgp_kernel_info(k.kernel.get(), &kdim, &korder, &kbeta));
    const std::string family = run.resolved["kernel"]["family"];

    Table t;
    if (sweep) t.columns.push_back("beta");
    for (auto& c : coordinate_columns(k.dim)) t.columns.push_back(c);
    t.columns.push_back("mean");
    t.columns.push_back("sd");
    for (long long j = 1; j <= draws; ++j) t.columns.push_back("sample_" + std::to_string(j));

    for (const double beta : betas) {
        if (!(beta > 0)) throw ConfigError("config key 'betas' must hold positive values");
        bbgp_kernel* raw = nullptr;
        const json& kc = run.resolved["kernel"];
        const double param = family == "helmholtz" ? kc["omega"].get<double>() : family == "power" ? kc["p"].get<double>() : 0.0;
        const bbgp_kernel_family fam =
            family == "helmholtz" ? BBGP_KERNEL_HELMHOLTZ : family == "power" ? BBGP_KERNEL_POWER : BBGP_KERNEL_BRIDGE;
        check(bbgp_kernel_create(fam, kdim, korder, beta, param, &raw));
        Kernel kernel(raw);
        Field mean = solve(q.get(), kernel.get());
        bbgp_sampler* s = nullptr;
        check(bbgp_sampler_create(kernel.get(), mean.get(), static_cast<std::size_t>(mesh), run.seed, &s));
        Sampler sampler(s);

        // Welford accumulation over chunks; the first `draws` draws are also emitted.
        std::vector<double> avg(npoints, 0.0), m2(npoints, 0.0);
        std::vector<double> paths(static_cast<std::size_t>(draws) * npoints);
        const long long total = std::max(draws, moment_draws);
        std::vector<double> buf;
        long long seen = 0;
        for (long long first = 0; first < total; first += chunk_draws) {
            const long long len = std::min(chunk_draws, total - first);
            buf.resize(static_cast<std::size_t>(len) * npoints);
            check(bbgp_sampler_sample_at(sampler.get(), pts.data(), npoints, static_cast<std::size_t>(len),
                                         static_cast<std::uint64_t>(first), buf.data()));
            for (long long r = 0; r < len; ++r) {
                const double* row = buf.data() + static_cast<std::size_t>(r) * npoints;
                const long long idx = first + r;
                if (idx < draws)
                    std::copy(row, row + npoints, paths.begin() + static_cast<std::ptrdiff_t>(idx * static_cast<long long>(npoints)));
                if (idx >= moment_draws) continue;
                ++seen;
                for (std::size_t i = 0; i < npoints; ++i) {
                    const double delta = row[i] - avg[i];
                    avg[i] += delta / static_cast<double>(seen);
                    m2[i] += delta * (row[i] - avg[i]);
                }
            }
        }
        for (std::size_t i = 0; i < npoints; ++i) {
            std::vector<Cell> row;
            if (sweep) row.emplace_back(beta);
            for (int a = 0; a < k.dim; ++a) row.emplace_back(pts[i * k.dim + a]);
            row.emplace_back(avg[i]);
            row.emplace_back(std::sqrt(m2[i] / static_cast<double>(seen - 1)));
            for (long long j = 0; j < draws; ++j) row.emplace_back(paths[static_cast<std::size_t>(j) * npoints + i]);
            t.rows.push_back(std::move(row));
        }
    }
    t.add_summary("moment_draws", moment_draws);
    return t;
}

Table cmd_fit(Run& run) {
    Section root(run.input, run.resolved, "", {"seed", "kernel", "source", "theta", "grid", "data"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source", "0"), k.dim, root.numbers("theta", {}));
    Field u0 = solve(q.get(), k.kernel.get());
    Observations obs = read_observations(root, k, u0.get(), run);
    if (obs.coefficient_model) throw ConfigError("fit needs point observations (data.kind 'points')");
    bbgp_posterior* raw = nullptr;
    check(bbgp_condition(k.kernel.get(), u0.get(), obs.X.data(), obs.n, obs.y.data(), obs.sigma2, &raw));
    Posterior post(raw);

    std::size_t npoints = 0;
    const std::vector<double> pts = output_grid(root, k.dim, npoints);
    std::vector<double> prior(npoints), mean(npoints), var(npoints);
    check(bbgp_field_eval(u0.get(), pts.data(), npoints, prior.data()));
    check(bbgp_posterior_mean(post.get(), pts.data(), npoints, mean.data()));
    check(bbgp_posterior_variance(post.get(), pts.data(), npoints, var.data()));

    Table t;
    t.columns = coordinate_columns(k.dim);
    for (const char* c : {"u0", "mean", "sd"}) t.columns.emplace_back(c);
    for (std::size_t i = 0; i < npoints; ++i) {
        std::vector<Cell> row;
        for (int a = 0; a < k.dim; ++a) row.emplace_back(pts[i * k.dim + a]);
        row.emplace_back(prior[i]);
        row.emplace_back(mean[i]);
        row.emplace_back(std::sqrt(std::max(var[i], 0.0)));
        t.rows.push_back(std::move(row));
    }
    double eta = 0.0;
    check(bbgp_posterior_eta(post.get(), &eta));
    t.add_summary("n", static_cast<long long>(obs.n));
    t.add_summary("eta", eta);
    if (obs.n >= 2) {
        bbgp_design_metrics m{};
        const bbgp_status s = bbgp_design_metrics_compute(obs.X.data(), obs.n, k.dim, &m);
        if (s == BBGP_OK) {
            t.add_summary("fill_distance", m.fill);
            t.add_summary("separation_radius", m.separation);
            t.add_summary("mesh_ratio", m.mesh_ratio);
        }
    }
    return t;
}

Table cmd_beta(Run& run) {
    Section root(run.input, run.resolved, "", {"seed", "kernel", "source", "theta", "data", "hyper", "beta_fixed"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source", "0"), k.dim, root.numbers("theta", {}));
    Field u0 = solve(q.get(), k.kernel.get());
    Observations obs = read_observations(root, k, u0.get(), run);
    const bbgp_hyper_prior hyper = read_hyper(root);
    bbgp_beta_estimate e{};
    if (obs.coefficient_model)
        check(bbgp_beta_map_coefficients(k.kernel.get(), u0.get(), obs.d.data(), obs.d.size(), obs.sigma2, hyper, &e));
    else
        check(bbgp_beta_map_points(k.kernel.get(), u0.get(), obs.X.data(), obs.n, obs.y.data(), obs.sigma2, hyper, &e));

    Table t;
    t.columns = {"beta", "objective", "boundary", "dirac_limit", "beta_formula", "ratio"};
    Cell formula = Null{}, ratio = Null{};
    if (obs.dist_sq && *obs.dist_sq > 0 && !e.dirac_limit) {
        const double m = static_cast<double>(obs.d.size());
        const double f = (hyper.kind == BBGP_PRIOR_JEFFREYS ? m - 2.0 : m) / *obs.dist_sq;
        formula = f;
        ratio = e.beta / f;
    }
    t.rows.push_back({e.beta, e.objective, static_cast<long long>(e.boundary), e.dirac_limit != 0, formula, ratio});
    t.add_summary("dirac_limit", e.dirac_limit != 0);
    return t;
}

Table cmd_invert(Run& run) {
    Section root(run.input, run.resolved, "",
                 {"seed", "kernel", "source", "theta", "data", "hyper", "beta_fixed", "basis", "family", "theta0"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source", "0"), k.dim, root.numbers("theta", {}));
    Field u0 = solve(q.get(), k.kernel.get());
    Observations obs = read_observations(root, k, u0.get(), run);
    const bbgp_hyper_prior hyper = read_hyper(root);

    bbgp_inverse_result* raw = nullptr;
    const bool linear = root.has("basis");
    if (linear == root.has("family")) throw ConfigError("invert needs exactly one of 'basis' or 'family'");
    if (linear) {
        if (root.has("theta0")) throw ConfigError("config key 'theta0' needs 'family'");
        std::vector<Source> basis;
        std::vector<const bbgp_source*> ptrs;
        for (const auto& text : root.texts("basis", {})) {
            basis.push_back(make_source(text, k.dim));
            ptrs.push_back(basis.back().get());
        }
        if (obs.coefficient_model)
            check(bbgp_invert_linear_coefficients(ptrs.data(), ptrs.size(), obs.d.data(), obs.d.size(), obs.sigma2,
                                                  hyper, k.kernel.get(), &raw));
        else
            check(bbgp_invert_linear_points(ptrs.data(), ptrs.size(), obs.X.data(), obs.n, obs.y.data(), obs.sigma2,
                                            hyper, k.kernel.get(), &raw));
    } else {
        const std::string text = root.text("family");
        Source probe = make_source(text, k.dim);
        int count = 0;
        check(bbgp_source_parameter_count(probe.get(), &count));
        const std::vector<double> theta0 = root.numbers("theta0", std::vector<double>(static_cast<std::size_t>(count), 0.0));
        if (obs.coefficient_model)
            check(bbgp_invert_nonlinear_coefficients(probe.get(), theta0.data(), theta0.size(), obs.d.data(),
                                                     obs.d.size(), obs.sigma2, hyper, k.kernel.get(), &raw));
        else
            check(bbgp_invert_nonlinear_points(probe.get(), theta0.data(), theta0.size(), obs.X.data(), obs.n,
                                               obs.y.data(), obs.sigma2, hyper, k.kernel.get(), &raw));
    }
    Inverse result(raw);
    std::size_t m = 0;
    check(bbgp_inverse_result_size(result.get(), &m));
    std::vector<double> mean(m), cov(m * m);
    check(bbgp_inverse_result_theta(result.get(), mean.data(), cov.data()));
    bbgp_beta_estimate e{};
    check(bbgp_inverse_result_beta(result.get(), &e));
    std::size_t flat = 0;
    int laplace = 0, converged = 0;
    check(bbgp_inverse_result_flags(result.get(), &flat, &laplace, &converged));

    Table t;
    t.columns = {"parameter", "mean", "sd"};
    for (std::size_t j = 1; j <= m; ++j) t.columns.push_back("cov_" + std::to_string(j));
    double trace = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<Cell> row{static_cast<long long>(i + 1), mean[i], std::sqrt(std::max(cov[i * m + i], 0.0))};
        for (std::size_t j = 0; j < m; ++j) row.emplace_back(cov[i * m + j]);
        trace += cov[i * m + i];
        t.rows.push_back(std::move(row));
    }
    add_estimate(t, e);
    t.add_summary("cov_trace", trace);
    t.add_summary("flat_directions", static_cast<long long>(flat));
    t.add_summary("laplace", laplace != 0);
    t.add_summary("converged", converged != 0);
    return t;
}

double eval_truth(const double* x, int dim, void* user) {
    double out = 0.0;
    if (bbgp_source_eval(static_cast<const bbgp_source*>(user), x, 1, &out) != BBGP_OK || dim != 1) return NAN;
    return out;
}

Table cmd_study_convergence(Run& run) {
    Section root(run.input, run.resolved, "", {"seed", "kernel", "source", "theta", "truth", "ns", "sigma2", "noisy",
                                                "nodes_per_interval"});
    KernelConfig k = read_kernel(root);
    Source q = make_source(root.text("source", "10*exp(-(x-0.25)^2)"), k.dim, root.numbers("theta", {}));
    Source truth = make_source(root.text("truth", "x*(1-x)*exp(x)"), k.dim);
    const std::vector<long long> ns64 = root.integers("ns", {16, 32, 64, 128, 256, 512});
    std::vector<int> ns(ns64.begin(), ns64.end());
    bbgp_convergence_options opts = bbgp_convergence_default_options();
    opts.sigma2 = root.number("sigma2", opts.sigma2);
    opts.noisy = root.boolean("noisy", opts.noisy != 0) ? 1 : 0;
    opts.nodes_per_interval = static_cast<int>(root.integer("nodes_per_interval", opts.nodes_per_interval));
    bbgp_convergence_report* raw = nullptr;
    check(bbgp_convergence_study(eval_truth, truth.get(), q.get(), k.kernel.get(), ns.data(), ns.size(), run.seed,
                                 &opts, &raw));
    Convergence report(raw);
    std::size_t rows = 0;
    check(bbgp_convergence_report_rows(report.get(), &rows));
    Table t;
    t.columns = {"n", "fill", "l2_error", "variance_norm"};
    for (std::size_t i = 0; i < rows; ++i) {
        bbgp_convergence_row r{};
        check(bbgp_convergence_report_row(report.get(), i, &r));
        t.rows.push_back({static_cast<long long>(r.n), r.fill, r.l2_error, r.variance_norm});
    }
    bbgp_slope_fit err{}, var{};
    check(bbgp_convergence_report_slopes(report.get(), &err, &var));
    t.add_summary("slope", err.slope);
    t.add_summary("slope_half_width", err.half_width);
    t.add_summary("variance_slope", var.slope);
    t.add_summary("variance_slope_half_width", var.half_width);
    return t;
}

Table cmd_study_model_error(Run& run) {
    Section root(run.input, run.resolved, "", {"seed", "kernel", "source", "theta", "epsilons", "perturbation",
                                                "observed", "sigma2", "noisy", "hyper", "beta_fixed", "theta_basis"});
    KernelConfig k = read_kernel(root, 2000);
    Source q = make_source(root.text("source", "10*exp(-(x-0.25)^2)"), k.dim, root.numbers("theta", {}));
    const std::vector<double> eps = root.numbers("epsilons", {0.0, 0.5, 1.0, 2.0, 4.0});
    Section p = root.child("perturbation", {"mode", "expression"});
    Field perturbation;
    if (p.has("expression")) {
        if (p.has("mode")) throw ConfigError("config keys 'perturbation.mode' and 'perturbation.expression' are exclusive");
        Source s = make_source(p.text("expression"), k.dim);
        perturbation = project(s.get(), k.order);
    } else {
        const long long mode = p.integer("mode", 1);
        std::size_t total = 1;
        for (int a = 0; a < k.dim; ++a) total *= static_cast<std::size_t>(k.order);
        if (mode < 1 || static_cast<std::size_t>(mode) > total) throw ConfigError("config key 'perturbation.mode' is out of range");
        std::vector<double> c(total, 0.0);
        c[static_cast<std::size_t>(mode - 1)] = 1.0;
        bbgp_field* f = nullptr;
        check(bbgp_field_create(k.dim, k.order, c.data(), &f));
        perturbation.reset(f);
    }
    bbgp_model_error_options opts = bbgp_model_error_default_options();
    opts.observed = static_cast<std::size_t>(root.integer("observed", static_cast<long long>(opts.observed)));
    opts.sigma2 = root.number("sigma2", opts.sigma2);
    opts.noisy = root.boolean("noisy", opts.noisy != 0) ? 1 : 0;
    opts.hyper = read_hyper(root);
    std::vector<Source> basis;
    std::vector<const bbgp_source*> ptrs;
    for (const auto& text : root.texts("theta_basis", {})) {
        basis.push_back(make_source(text, k.dim));
        ptrs.push_back(basis.back().get());
    }
    opts.theta_basis = ptrs.empty() ? nullptr : ptrs.data();
    opts.theta_basis_count = ptrs.size();
    bbgp_model_error_report* raw = nullptr;
    check(bbgp_model_error_study(q.get(), k.kernel.get(), perturbation.get(), eps.data(), eps.size(), run.seed, &opts,
                                 &raw));
    ModelError report(raw);
    std::size_t rows = 0;
    check(bbgp_model_error_report_rows(report.get(), &rows));
    Table t;
    t.columns = {"epsilon", "beta", "objective", "boundary", "dirac_limit", "beta_formula", "ratio", "jeffreys_ratio",
                 "theta_cov_trace"};
    for (std::size_t i = 0; i < rows; ++i) {
        bbgp_model_error_row r{};
        check(bbgp_model_error_report_row(report.get(), i, &r));
        t.rows.push_back({r.epsilon, r.beta.beta, r.beta.objective, static_cast<long long>(r.beta.boundary),
                          r.beta.dirac_limit != 0, r.has_formula ? Cell(r.beta_formula) : Cell(Null{}),
                          r.has_formula ? Cell(r.ratio) : Cell(Null{}),
                          r.has_jeffreys_ratio ? Cell(r.jeffreys_ratio) : Cell(Null{}),
                          r.has_theta_cov_trace ? Cell(r.theta_cov_trace) : Cell(Null{})});
    }
    t.add_summary("observed", static_cast<long long>(opts.observed));
    return t;
}

// ---------------------------------------------------------------------------

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        json j = json::parse(ss.str());
        if (!j.is_object()) throw ConfigError("config '" + path + "' must hold a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + std::string(e.what()));
    }
}

int execute(Table (*command)(Run&), const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
            const std::string& out_path, const std::string& format, bool timing) {
    const auto start = std::chrono::steady_clock::now();
    try {
        Run run;
        run.input = load_config(config_path);
        if (!config_path.empty()) run.base_dir = std::filesystem::absolute(config_path).parent_path();
        if (run.input.contains("seed")) {
            const json& s = run.input["seed"];
            if (!s.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
            run.seed = s.get<std::uint64_t>();
        }
        if (seed_flag) run.seed = *seed_flag;
        Table table = command(run);
        run.resolved["seed"] = run.seed;
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (timing) table.add_summary("wall_time_s", wall);
        const std::string text =
            cli::render(table, run.resolved.dump(), run.seed, format == "json" ? cli::Format::Json : cli::Format::Csv);
        if (out_path.empty() || out_path == "-") {
            std::fwrite(text.data(), 1, text.size(), stdout);
            std::fflush(stdout);
        } else {
            cli::write_atomically(out_path, text);
        }
        std::fprintf(stderr, "bbgp: wall time %.3f s\n", wall);
        return kExitOk;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "bbgp: config error: %s\n", e.what());
        return kExitConfig;
    } catch (const ResourceError& e) {
        std::fprintf(stderr, "bbgp: resource limit: %s\n", e.what());
        return kExitResource;
    } catch (const ApiError& e) {
        std::fprintf(stderr, "bbgp: %s: %s\n", bbgp_status_string(e.status), e.message.c_str());
        switch (e.status) {
            case BBGP_ERR_INVALID_ARGUMENT: return kExitConfig;
            case BBGP_ERR_NUMERICAL: return kExitNumerical;
            case BBGP_ERR_RESOURCE: return kExitResource;
            default: return kExitInternal;
        }
    } catch (const std::bad_alloc&) {
        std::fprintf(stderr, "bbgp: out of memory\n");
        return kExitResource;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "bbgp: error: %s\n", e.what());
        return kExitInternal;
    }
}

void log_to_stderr(bbgp_log_level level, const char* message, void*) {
    std::fprintf(stderr, "bbgp: %s: %s\n", level == BBGP_LOG_WARNING ? "warning" : "info", message);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral Gaussian-process solver for the Poisson equation on the unit cube"};
    app.set_version_flag("--version", std::string(bbgp_version()));
    app.require_subcommand(1);

    std::string config_path, out_path, format = "csv";
    std::optional<std::uint64_t> seed;
    bool timing = false;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Random seed, overrides the config");
        sub->add_option("--out", out_path, "Output file (stdout when omitted)");
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_flag("--timing", timing, "Record wall time in the output (breaks byte-identical reruns)");
    };

    Table (*command)(Run&) = nullptr;
    auto bind = [&](CLI::App* sub, Table (*fn)(Run&)) {
        add_common(sub);
        sub->callback([&command, fn] { command = fn; });
    };
    bind(app.add_subcommand("solve", "Solve the Poisson equation for the prior mean"), cmd_solve);
    bind(app.add_subcommand("sample", "Draw prior sample paths and empirical moments"), cmd_sample);
    bind(app.add_subcommand("fit", "Condition on point observations"), cmd_fit);
    bind(app.add_subcommand("beta", "Estimate the prior precision"), cmd_beta);
    bind(app.add_subcommand("invert", "Infer source parameters"), cmd_invert);
    CLI::App* study = app.add_subcommand("study", "Run an experiment sweep");
    study->require_subcommand(1);
    bind(study->add_subcommand("convergence", "Posterior convergence as the design fills in"), cmd_study_convergence);
    bind(study->add_subcommand("model-error", "Precision estimates under source misspecification"),
         cmd_study_model_error);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    bbgp_set_log_callback(log_to_stderr, nullptr);
    return execute(command, config_path, seed, out_path, format, timing);
}
