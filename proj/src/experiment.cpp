#include "cocycle/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "cocycle/exceptional.hpp"
#include "cocycle/lyapunov.hpp"
#include "cocycle/operator_lab.hpp"
#include "cocycle/parallel.hpp"
#include "cocycle/random.hpp"
#include "cocycle/subharmonic.hpp"

namespace cocycle {

using nlohmann::json;

namespace {

constexpr std::uint64_t kReferenceTag = 0x52454600ULL;
constexpr std::uint64_t kFrameTag = 0x46524d00ULL;

const std::map<std::string, std::set<std::string>>& task_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"lyapunov", {"z", "n", "samples", "stride"}},
        {"field", {"grid", "n", "k", "samples", "mode", "analytic"}},
        {"riesz", {"grid", "n", "k", "samples", "mode", "analytic", "strips"}},
        {"circular", {"radius", "ntheta", "n", "samples"}},
        {"ids", {"L", "samples", "points"}},
        {"thouless", {"L", "samples", "n", "gamma_samples", "per_line"}},
        {"scan-liminf", {"e_min", "e_max", "points", "tau", "i_max", "i_min", "epsilon", "ref_n", "ref_samples"}},
        {"scan-pn", {"e_min", "e_max", "points", "weight", "n_max", "epsilon"}},
        {"cover", {"a", "b", "eps", "levels", "gauges", "ref_n", "ref_samples"}},
        {"subseq", {"energy", "n_max", "n_min", "ref_n", "ref_samples"}},
        {"restricted", {"z", "n", "frames", "ref_n", "ref_samples"}},
        {"green", {"z", "n_max", "L"}},
        {"ldp", {"energy", "j", "epsilon", "n_list", "ensemble", "ref_n", "ref_samples"}},
    };
    return keys;
}

const std::map<std::string, std::set<std::string>>& model_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"free", {"kind", "width"}},
        {"constant", {"kind", "width", "value"}},
        {"anderson", {"kind", "width", "amplitude", "transverse"}},
        {"lloyd", {"kind", "width", "scale"}},
        {"iid",
         {"kind", "width", "distribution", "structure", "amplitude", "offset", "support", "probability",
          "irreducible"}},
        {"quasi_periodic", {"kind", "width", "frequency", "terms", "phase"}},
    };
    return keys;
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed,
                std::vector<std::string>& bad) {
    if (!obj.is_object()) return;
    for (const auto& item : obj.items())
        if (!allowed.count(item.key())) bad.push_back(path.empty() ? item.key() : path + "." + item.key());
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
    return out;
}

const json* find(const json& obj, const std::string& key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_real(const json& obj, const std::string& key, const std::string& path, std::optional<double> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw SchemaError({path + "." + key}, "missing required key");
    }
    if (!v->is_number()) throw SchemaError({path + "." + key}, "expected a number");
    return v->get<double>();
}

/// Integers built in code are signed in the JSON model; accept any non-negative one.
bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

std::size_t get_count(const json& obj, const std::string& key, const std::string& path,
                      std::optional<std::size_t> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw SchemaError({path + "." + key}, "missing required key");
    }
    if (is_count(*v)) return v->get<std::size_t>();
    if (v->is_number_float() && v->get<double>() >= 0.0 && std::floor(v->get<double>()) == v->get<double>())
        return static_cast<std::size_t>(v->get<double>());
    throw SchemaError({path + "." + key}, "expected a non-negative integer");
}

bool get_bool(const json& obj, const std::string& key, const std::string& path, bool fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw SchemaError({path + "." + key}, "expected a boolean");
    return v->get<bool>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path,
                       std::optional<std::string> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw SchemaError({path + "." + key}, "missing required key");
    }
    if (!v->is_string()) throw SchemaError({path + "." + key}, "expected a string");
    return v->get<std::string>();
}

Complex get_complex(const json& obj, const std::string& key, const std::string& path, std::optional<Complex> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw SchemaError({path + "." + key}, "missing required key");
    }
    if (v->is_number()) return {v->get<double>(), 0.0};
    if (v->is_array() && v->size() == 2 && (*v)[0].is_number() && (*v)[1].is_number())
        return {(*v)[0].get<double>(), (*v)[1].get<double>()};
    throw SchemaError({path + "." + key}, "expected a number or [re, im]");
}

std::vector<double> get_reals(const json& obj, const std::string& key, const std::string& path,
                              std::optional<std::vector<double>> fallback) {
    const json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        throw SchemaError({path + "." + key}, "missing required key");
    }
    if (!v->is_array()) throw SchemaError({path + "." + key}, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& x : *v) {
        if (!x.is_number()) throw SchemaError({path + "." + key}, "expected an array of numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<std::size_t> get_counts(const json& obj, const std::string& key, const std::string& path,
                                    std::vector<std::size_t> fallback) {
    const json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_array()) throw SchemaError({path + "." + key}, "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& x : *v) {
        if (!is_count(x)) throw SchemaError({path + "." + key}, "expected an array of integers");
        out.push_back(x.get<std::size_t>());
    }
    return out;
}

RMatrix parse_matrix(const json& v, int width, const std::string& path) {
    if (v.is_number() && width == 1) return RMatrix::Constant(1, 1, v.get<double>());
    if (!v.is_array() || static_cast<int>(v.size()) != width)
        throw SchemaError({path}, "expected a W x W matrix (array of rows)");
    RMatrix m(width, width);
    for (int i = 0; i < width; ++i) {
        const auto& row = v[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != width)
            throw SchemaError({path}, "expected a W x W matrix (array of rows)");
        for (int j = 0; j < width; ++j) {
            if (!row[static_cast<std::size_t>(j)].is_number()) throw SchemaError({path}, "matrix entries must be numbers");
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return m;
}

void collect_model_keys(const json& m, std::vector<std::string>& bad) {
    if (!m.is_object()) return;
    const json* kind = find(m, "kind");
    if (!kind || !kind->is_string()) return;
    const auto it = model_keys().find(kind->get<std::string>());
    if (it == model_keys().end()) return;
    check_keys(m, "model", it->second, bad);
    if (it->first == "quasi_periodic") {
        if (const json* terms = find(m, "terms"); terms && terms->is_array())
            for (std::size_t i = 0; i < terms->size(); ++i)
                check_keys((*terms)[i], "model.terms[" + std::to_string(i) + "]", {"harmonic", "cos", "sin"}, bad);
    }
}

void collect_param_keys(const std::string& task, const json& p, std::vector<std::string>& bad) {
    const auto it = task_keys().find(task);
    if (it == task_keys().end()) return;
    check_keys(p, "params", it->second, bad);
    if (const json* g = find(p, "grid")) check_keys(*g, "params.grid", {"x0", "x1", "y0", "y1", "h"}, bad);
    if (const json* w = find(p, "weight")) check_keys(*w, "params.weight", {"name", "parameter"}, bad);
    if (const json* gs = find(p, "gauges"); gs && gs->is_array())
        for (std::size_t i = 0; i < gs->size(); ++i)
            check_keys((*gs)[i], "params.gauges[" + std::to_string(i) + "]", {"name", "parameter"}, bad);
}

// ---- output helpers --------------------------------------------------------

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

class Csv {
public:
    explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {
        for (std::size_t i = 0; i < columns_.size(); ++i) text_ += (i ? "," : "") + columns_[i];
        text_ += "\n";
    }

    template <typename... Ts>
    void row(const Ts&... values) {
        std::string line;
        ((line += (line.empty() ? "" : ",") + cell(values)), ...);
        text_ += line + "\n";
    }

    const std::string& text() const { return text_; }
    const std::vector<std::string>& columns() const { return columns_; }

private:
    static std::string cell(double x) { return fmt(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(bool x) { return x ? "1" : "0"; }
    static std::string cell(const std::string& s) { return s; }

    std::vector<std::string> columns_;
    std::string text_;
};

class Writer {
public:
    explicit Writer(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void csv(const std::string& name, const Csv& table) { write(name, table.text(), table.columns()); }
    void summary(const std::string& name, const json& doc) { write(name, doc.dump(2) + "\n", {}); }

    std::vector<OutputFile> files;

private:
    void write(const std::string& name, const std::string& body, const std::vector<std::string>& columns) {
        std::ofstream out(dir_ / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
        out << body;
        files.push_back({name, sha256_hex(body), columns});
    }
    std::filesystem::path dir_;
};

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

std::vector<double> linspace(double a, double b, std::size_t points) {
    if (points < 2) throw SchemaError({"params.points"}, "need at least two grid points");
    if (!(b > a)) throw SchemaError({"params.e_min", "params.e_max"}, "need e_min < e_max");
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i)
        out[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    return out;
}

struct Context {
    const ExperimentConfig& config;
    const json& p;
    RunOptions options;
    OrbitSeed root;
    OrbitSeed reference_seed;
    Writer& out;
    json summary;

    LyapunovEstimate reference(Complex z) const {
        const std::size_t n = get_count(p, "ref_n", "params", 2000);
        const std::size_t samples = get_count(p, "ref_samples", "params", 8);
        return lyapunov_spectrum(config.model, z, n, samples, reference_seed, options);
    }
};

ComplexGrid parse_grid(const json& p) {
    const json* g = find(p, "grid");
    if (!g || !g->is_object()) throw SchemaError({"params.grid"}, "missing grid object");
    return ComplexGrid::make(get_real(*g, "x0", "params.grid", std::nullopt), get_real(*g, "x1", "params.grid", std::nullopt),
                             get_real(*g, "y0", "params.grid", std::nullopt), get_real(*g, "y1", "params.grid", std::nullopt),
                             get_real(*g, "h", "params.grid", std::nullopt));
}

GridField compute_field(Context& c) {
    const ComplexGrid grid = parse_grid(c.p);
    const int k = static_cast<int>(get_count(c.p, "k", "params", static_cast<std::size_t>(c.config.model.width)));
    if (get_bool(c.p, "analytic", "params", false)) {
        const auto* spec = std::get_if<ConstantSpec>(&c.config.model.variant);
        if (c.config.model.width != 1 || !spec || spec->value.norm() != 0.0)
            throw SchemaError({"params.analytic"}, "the analytic field exists only for the free W = 1 model");
        return sample_field(grid, 1, free_gamma);
    }
    const std::string mode = get_string(c.p, "mode", "params", "independent");
    if (mode != "independent" && mode != "shared") throw SchemaError({"params.mode"}, "mode is independent or shared");
    return field_gamma(c.config.model, grid, get_count(c.p, "n", "params", 1000), k,
                       get_count(c.p, "samples", "params", 4), c.root,
                       mode == "shared" ? FieldMode::SharedOrbit : FieldMode::Independent, c.options);
}

void write_field(Context& c, const GridField& f) {
    Csv t({"x", "y", "value", "stderr", "near_axis"});
    for (std::size_t iy = 0; iy < f.grid.ny(); ++iy)
        for (std::size_t ix = 0; ix < f.grid.nx(); ++ix) {
            const auto i = f.grid.index(ix, iy);
            const Complex z = f.grid.node(ix, iy);
            t.row(z.real(), z.imag(), f.values[i], f.stderr_[i], f.near_axis[i] != 0);
        }
    c.out.csv("field.csv", t);
}

// ---- tasks -------------------------------------------------------------------

void task_lyapunov(Context& c) {
    const Complex z = get_complex(c.p, "z", "params", std::nullopt);
    RunOptions opt = c.options;
    opt.stride = get_count(c.p, "stride", "params", 1);
    const auto est = lyapunov_spectrum(c.config.model, z, get_count(c.p, "n", "params", 10000),
                                       get_count(c.p, "samples", "params", 1), c.root, opt);
    Csv t({"j", "gamma", "stderr", "partial_sum", "partial_sum_stderr"});
    json rows = json::array();
    for (int j = 0; j < est.width(); ++j) {
        t.row(j + 1, est.gamma(j), est.stderr_(j), est.partial_sum(j), est.partial_sum_stderr(j));
        rows.push_back({{"j", j + 1}, {"gamma", est.gamma(j)}, {"stderr", est.stderr_(j)},
                        {"partial_sum", est.partial_sum(j)}, {"partial_sum_stderr", est.partial_sum_stderr(j)}});
    }
    c.out.csv("lyapunov.csv", t);
    c.summary = {{"z", complex_json(z)}, {"steps", est.steps}, {"samples", est.samples},
                 {"raw_pairing_defect", est.raw_pairing_defect}, {"exponents", rows}};
}

void task_field(Context& c) {
    const GridField f = compute_field(c);
    write_field(c, f);
    double lo = f.values.front(), hi = f.values.front();
    for (double v : f.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    c.summary = {{"k", f.k}, {"n", f.n}, {"samples", f.samples}, {"nodes", f.values.size()},
                 {"min", lo}, {"max", hi}, {"submean_defect", submean_defect(f)}};
}

void task_riesz(Context& c) {
    const GridField f = compute_field(c);
    const RieszEstimate r = riesz_measure(f);
    Csv t({"x", "y", "mass"});
    for (std::size_t i = 0; i < r.cell_mass.size(); ++i)
        if (r.cell_mass[i] > 0.0) t.row(r.center(i).real(), r.center(i).imag(), r.cell_mass[i]);
    c.out.csv("riesz.csv", t);
    json strips = json::array();
    if (const json* s = find(c.p, "strips")) {
        if (!s->is_array()) throw SchemaError({"params.strips"}, "expected [[a, b], ...]");
        for (const auto& ab : *s) {
            if (!ab.is_array() || ab.size() != 2 || !ab[0].is_number() || !ab[1].is_number())
                throw SchemaError({"params.strips"}, "expected [[a, b], ...]");
            const double a = ab[0].get<double>(), b = ab[1].get<double>();
            strips.push_back({{"a", a}, {"b", b}, {"mass", r.strip_mass(a, b)}});
        }
    }
    c.summary = {{"total", r.total}, {"negative_clipped", r.negative_clipped},
                 {"boundary_fraction", r.boundary_fraction}, {"boundary_warning", r.boundary_warning},
                 {"ball_mass_bound", r.ball_mass_bound()}, {"strips", strips}};
}

void task_circular(Context& c) {
    const double radius = get_real(c.p, "radius", "params", std::nullopt);
    const auto m = circular_mean(c.config.model, radius, get_count(c.p, "ntheta", "params", 128),
                                 get_count(c.p, "n", "params", 1000), get_count(c.p, "samples", "params", 1), c.root,
                                 c.options);
    Csv t({"j", "mean", "log_radius"});
    json rows = json::array();
    for (Eigen::Index j = 0; j < m.mean.size(); ++j) {
        t.row(static_cast<int>(j + 1), m.mean(j), std::log(radius));
        rows.push_back({{"j", j + 1}, {"mean", m.mean(j)}});
    }
    c.out.csv("circular.csv", t);
    c.summary = {{"radius", radius}, {"ntheta", m.ntheta}, {"log_radius", std::log(radius)}, {"means", rows}};
}

void task_ids(Context& c) {
    const auto ids = ids_estimate(c.config.model, get_count(c.p, "L", "params", 500),
                                  get_count(c.p, "samples", "params", 10), c.root, c.options);
    const auto grid = linspace(ids.hull_min() - 0.5, ids.hull_max() + 0.5, get_count(c.p, "points", "params", 401));
    Csv t({"E", "kappa"});
    for (double e : grid) t.row(e, ids.kappa(e));
    c.out.csv("ids.csv", t);
    c.summary = {{"L", ids.sites}, {"samples", ids.samples}, {"eigenvalues", ids.eigenvalues.size()},
                 {"support_hull", {ids.hull_min(), ids.hull_max()}}};
}

void task_thouless(Context& c) {
    const auto ids = ids_estimate(c.config.model, get_count(c.p, "L", "params", 500),
                                  get_count(c.p, "samples", "params", 10), c.root, c.options);
    const auto pts = thouless_test_points(ids, get_count(c.p, "per_line", "params", 9));
    const std::size_t n = get_count(c.p, "n", "params", 20000);
    const std::size_t gs = get_count(c.p, "gamma_samples", "params", 4);
    std::vector<double> gamma(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto est = lyapunov_spectrum(c.config.model, pts[i], n, gs, c.reference_seed.member(i), c.options);
        gamma[i] = est.partial_sum(est.width() - 1) / static_cast<double>(est.width());
    }
    const auto rep = thouless_residual(pts, gamma, ids);
    Csv t({"re", "im", "gamma", "potential", "excluded"});
    for (const auto& pt : rep.points) t.row(pt.z.real(), pt.z.imag(), pt.gamma, pt.potential, pt.excluded);
    c.out.csv("thouless.csv", t);
    c.summary = {{"residual", rep.residual}, {"excluded", rep.excluded}, {"points", rep.points.size()},
                 {"support_hull", {ids.hull_min(), ids.hull_max()}}};
}

json dips_json(const ScanReport& r) {
    json d = json::array();
    for (const auto& dip : r.dips) d.push_back({{"E", dip.energy}, {"depth", dip.depth}});
    return d;
}

void write_scan(Context& c, const std::string& name, const ScanReport& r) {
    Csv t({"E", "statistic", "reference"});
    for (std::size_t i = 0; i < r.energies.size(); ++i) t.row(r.energies[i], r.statistic[i], r.reference[i]);
    c.out.csv(name, t);
}

void task_scan_liminf(Context& c) {
    const auto energies = linspace(get_real(c.p, "e_min", "params", std::nullopt),
                                   get_real(c.p, "e_max", "params", std::nullopt), get_count(c.p, "points", "params", 101));
    const auto schedule = Schedule::make(get_real(c.p, "tau", "params", 0.5), get_count(c.p, "i_max", "params", 20),
                                         get_count(c.p, "i_min", "params", 0));
    std::vector<double> ref(energies.size());
    const int w = c.config.model.width;
    for (std::size_t i = 0; i < energies.size(); ++i) ref[i] = c.reference(Complex(energies[i], 0.0)).gamma(w - 1);
    std::optional<double> eps;
    if (find(c.p, "epsilon")) eps = get_real(c.p, "epsilon", "params", std::nullopt);
    const auto r = liminf_scan(c.config.model, c.root, energies, schedule, ref, eps, c.options);
    write_scan(c, "scan_liminf.csv", r);
    json levels = schedule.levels();
    c.summary = {{"levels", levels}, {"epsilon", eps ? json(*eps) : json("0.1*reference")}, {"dips", dips_json(r)}};
}

void task_scan_pn(Context& c) {
    const auto energies = linspace(get_real(c.p, "e_min", "params", std::nullopt),
                                   get_real(c.p, "e_max", "params", std::nullopt), get_count(c.p, "points", "params", 101));
    const json* wj = find(c.p, "weight");
    if (!wj || !wj->is_object()) throw SchemaError({"params.weight"}, "missing weight {name, parameter}");
    const auto weight = PnWeight::from_name(get_string(*wj, "name", "params.weight", std::nullopt),
                                            get_real(*wj, "parameter", "params.weight", std::nullopt));
    const double eps = get_real(c.p, "epsilon", "params", 0.0);
    const auto r = pn_scan(c.config.model, c.root, energies, weight, get_count(c.p, "n_max", "params", 1000), eps,
                           c.options);
    write_scan(c, "scan_pn.csv", r);
    c.summary = {{"weight", weight.name()}, {"parameter", weight.parameter}, {"epsilon", eps},
                 {"dips", dips_json(r)}};
}

void task_cover(Context& c) {
    const double a = get_real(c.p, "a", "params", std::nullopt);
    const double b = get_real(c.p, "b", "params", std::nullopt);
    const double eps = get_real(c.p, "eps", "params", std::nullopt);
    const auto levels = get_counts(c.p, "levels", "params", {55, 90, 148});
    std::vector<Gauge> gauges;
    if (const json* gs = find(c.p, "gauges")) {
        if (!gs->is_array()) throw SchemaError({"params.gauges"}, "expected an array of {name, parameter}");
        for (std::size_t i = 0; i < gs->size(); ++i) {
            const std::string path = "params.gauges[" + std::to_string(i) + "]";
            gauges.push_back(gauge_by_name(get_string((*gs)[i], "name", path, std::nullopt),
                                           get_real((*gs)[i], "parameter", path, std::nullopt)));
        }
    } else {
        gauges.push_back(gauge_power(0.5));
    }
    const int w = c.config.model.width;
    const auto est = c.reference(Complex(a, 0.0));
    const double reference = w == 1 ? est.gamma(0) : est.partial_sum(w - 2);
    Csv t({"level", "a", "b"});
    json covers = json::array();
    for (std::size_t level : levels) {
        const Cover cover = build_cover(c.config.model, c.root, a, b, eps, level, reference, est.gamma(0), c.options);
        json iv = json::array();
        for (const auto& [lo, hi] : cover.intervals) {
            t.row(level, lo, hi);
            iv.push_back({lo, hi});
        }
        json content = json::object();
        for (const auto& g : gauges) content[g.name] = gauge_content(cover, g);
        covers.push_back({{"level", level}, {"threshold", cover.threshold}, {"resolution", cover.resolution},
                          {"intervals", iv}, {"total_length", cover.total_length()},
                          {"max_length", cover.max_length()}, {"content", content}});
    }
    c.out.csv("cover.csv", t);
    c.summary = {{"reference", reference}, {"covers", covers}};
}

void task_subseq(Context& c) {
    const double e = get_real(c.p, "energy", "params", std::nullopt);
    const auto ref = c.reference(Complex(e, 0.0));
    const auto rec = subseq_statistic(c.config.model, c.root, e, get_count(c.p, "n_max", "params", 100000), ref.gamma,
                                      get_count(c.p, "n_min", "params", 1));
    Csv t({"n", "value"});
    for (std::size_t n = 1; n <= rec.values.size(); ++n) t.row(n, rec.value(n));
    c.out.csv("subseq.csv", t);
    json paired = json::array();
    for (const auto& [n, v] : rec.paired) paired.push_back({{"n", n}, {"min_to_n_squared", v}});
    c.summary = {{"energy", e}, {"n_min", rec.n_min}, {"min_value", rec.min_value}, {"argmin", rec.argmin},
                 {"paired", paired}};
}

void task_restricted(Context& c) {
    const Complex z = get_complex(c.p, "z", "params", Complex(0.0, 1.0));
    const std::size_t n = get_count(c.p, "n", "params", 10000);
    const std::size_t frames = get_count(c.p, "frames", "params", 20);
    const int w = c.config.model.width;
    const auto ref = c.reference(z);
    Csv t({"frame", "total_rate", "min_column_rate", "unrestricted_rate"});
    std::vector<RestrictedGrowth> runs(frames);
    parallel_for(frames, c.options.threads, [&](std::size_t i) {
        runs[i] = restricted_growth(c.config.model, c.root, z, random_lagrangian(w, derive_key(c.config.seed ^ kFrameTag, i)), n);
    });
    for (std::size_t i = 0; i < frames; ++i) t.row(i, runs[i].total_rate, runs[i].min_column_rate, runs[i].unrestricted_rate);
    c.out.csv("restricted.csv", t);
    c.summary = {{"z", complex_json(z)}, {"n", n}, {"frames", frames},
                 {"gamma_w_sum", ref.partial_sum(w - 1)}, {"gamma_w_sum_stderr", ref.partial_sum_stderr(w - 1)}};
}

void task_green(Context& c) {
    const Complex z = get_complex(c.p, "z", "params", std::nullopt);
    const auto probe = green_block(c.config.model, c.root, z, get_count(c.p, "n_max", "params", 60),
                                   get_count(c.p, "L", "params", 200));
    Csv t({"n", "norm"});
    for (std::size_t i = 0; i < probe.n.size(); ++i) t.row(probe.n[i], probe.norms[i]);
    c.out.csv("green.csv", t);
    c.summary = {{"z", complex_json(z)}, {"rate", probe.rate}, {"r_squared", probe.r_squared},
                 {"ct_constant", probe.ct_constant}, {"norms", probe.norms}};
}

void task_ldp(Context& c) {
    const double e = get_real(c.p, "energy", "params", std::nullopt);
    const auto ref = c.reference(Complex(e, 0.0));
    const auto curve = ldp_tail(c.config.model, e, static_cast<int>(get_count(c.p, "j", "params", 1)),
                                get_real(c.p, "epsilon", "params", 0.1),
                                get_counts(c.p, "n_list", "params", {200, 400, 800, 1600}),
                                get_count(c.p, "ensemble", "params", 4000), ref, c.root, c.options);
    Csv t({"n", "p_hat"});
    for (std::size_t i = 0; i < curve.n_list.size(); ++i) t.row(curve.n_list[i], curve.p_hat[i]);
    c.out.csv("ldp.csv", t);
    c.summary = {{"energy", e}, {"j", curve.index}, {"epsilon", curve.epsilon}, {"ensemble", curve.ensemble},
                 {"gamma_ref", ref.gamma(curve.index - 1)}, {"p_hat", curve.p_hat}, {"rate", curve.rate},
                 {"log_prefactor", curve.log_prefactor}, {"r_squared", curve.r_squared}, {"censored", curve.censored}};
}

std::string module_of(const std::string& operation) {
    static const std::map<std::string, std::string> modules = {
        {"build_transfer", "symplectic-core"}, {"wedge_logsum", "symplectic-core"},
        {"compound_matrix", "symplectic-core"}, {"LagrangianFrame", "symplectic-core"},
        {"qr_step", "symplectic-core"}, {"reorthogonalize", "symplectic-core"},
        {"slow_subspace", "symplectic-core"}, {"WedgeProduct", "symplectic-core"},
        {"orbit_potentials", "ergodic-drivers"}, {"validate_model", "ergodic-drivers"},
        {"lyapunov_spectrum", "lyapunov-engine"}, {"ldp_tail", "lyapunov-engine"},
        {"doubling_check", "lyapunov-engine"}, {"ComplexGrid", "subharmonic-lab"},
        {"field_gamma", "subharmonic-lab"}, {"log_potential", "subharmonic-lab"},
        {"circular_mean", "subharmonic-lab"}, {"Schedule", "exceptional-scanner"},
        {"liminf_scan", "exceptional-scanner"}, {"pn_scan", "exceptional-scanner"},
        {"PnWeight", "exceptional-scanner"}, {"build_cover", "exceptional-scanner"},
        {"subseq_statistic", "exceptional-scanner"}, {"restricted_growth", "exceptional-scanner"},
        {"assemble_finite", "operator-lab"}, {"eigenvalues", "operator-lab"},
        {"ids_estimate", "operator-lab"}, {"thouless_residual", "operator-lab"},
        {"green_block", "operator-lab"}, {"config", "experiment-cli"},
    };
    const auto it = modules.find(operation);
    return it == modules.end() ? "unknown" : it->second;
}

using TaskFn = void (*)(Context&);

const std::map<std::string, TaskFn>& task_table() {
    static const std::map<std::string, TaskFn> table = {
        {"lyapunov", task_lyapunov}, {"field", task_field},           {"riesz", task_riesz},
        {"circular", task_circular}, {"ids", task_ids},               {"thouless", task_thouless},
        {"scan-liminf", task_scan_liminf}, {"scan-pn", task_scan_pn}, {"cover", task_cover},
        {"subseq", task_subseq},     {"restricted", task_restricted}, {"green", task_green},
        {"ldp", task_ldp},
    };
    return table;
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> keys, const std::string& what)
    : ValidationError("config", what + (keys.empty() ? "" : " [" + join(keys) + "]")), keys_(std::move(keys)) {}

const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& [k, _] : task_keys()) v.push_back(k);
        return v;
    }();
    return names;
}

PotentialModel parse_model(const json& m) {
    if (!m.is_object()) throw SchemaError({"model"}, "model must be an object");
    const std::string kind = get_string(m, "kind", "model", std::nullopt);
    if (!model_keys().count(kind))
        throw SchemaError({"model.kind"}, "unknown model kind '" + kind + "'");
    const auto width_count = get_count(m, "width", "model", 1);
    if (width_count < 1 || width_count > 16) throw SchemaError({"model.width"}, "width must lie in 1..16");
    const int w = static_cast<int>(width_count);
    PotentialModel model;
    if (kind == "free") {
        model = PotentialModel::free(w);
    } else if (kind == "constant") {
        const json* v = find(m, "value");
        if (!v) throw SchemaError({"model.value"}, "missing required key");
        model = PotentialModel::constant(parse_matrix(*v, w, "model.value"));
    } else if (kind == "anderson") {
        model = PotentialModel::anderson_bernoulli(w, get_real(m, "amplitude", "model", 1.0),
                                                   get_bool(m, "transverse", "model", w > 1));
    } else if (kind == "lloyd") {
        model = PotentialModel::lloyd(w, get_real(m, "scale", "model", 1.0));
    } else if (kind == "iid") {
        IidSpec spec;
        const std::string dist = get_string(m, "distribution", "model", std::nullopt);
        static const std::map<std::string, Distribution> dists = {{"bernoulli", Distribution::Bernoulli},
                                                                  {"uniform", Distribution::Uniform},
                                                                  {"cauchy", Distribution::Cauchy},
                                                                  {"two_point", Distribution::TwoPoint}};
        if (!dists.count(dist)) throw SchemaError({"model.distribution"}, "unknown distribution '" + dist + "'");
        spec.distribution = dists.at(dist);
        const std::string structure = get_string(m, "structure", "model", "diagonal");
        if (structure != "scalar" && structure != "diagonal")
            throw SchemaError({"model.structure"}, "structure is scalar or diagonal");
        spec.structure = structure == "scalar" ? Structure::Scalar : Structure::Diagonal;
        spec.amplitude = get_real(m, "amplitude", "model", 1.0);
        if (const json* o = find(m, "offset")) spec.offset = parse_matrix(*o, w, "model.offset");
        if (const json* s = find(m, "support")) {
            if (!s->is_array()) throw SchemaError({"model.support"}, "expected two matrices");
            for (const auto& mat : *s) spec.support.push_back(parse_matrix(mat, w, "model.support"));
        }
        spec.probability = get_real(m, "probability", "model", 0.5);
        spec.irreducible_asserted = get_bool(m, "irreducible", "model", false);
        model.width = w;
        model.variant = spec;
    } else {
        QuasiPeriodicSpec spec;
        spec.frequency = get_reals(m, "frequency", "model", std::nullopt);
        const json* terms = find(m, "terms");
        if (!terms || !terms->is_array()) throw SchemaError({"model.terms"}, "expected an array of terms");
        for (std::size_t i = 0; i < terms->size(); ++i) {
            const std::string path = "model.terms[" + std::to_string(i) + "]";
            const json& tj = (*terms)[i];
            TrigTerm term;
            for (double h : get_reals(tj, "harmonic", path, std::nullopt)) term.harmonic.push_back(static_cast<int>(h));
            if (const json* cj = find(tj, "cos")) term.cos_coeff = parse_matrix(*cj, w, path + ".cos");
            if (const json* sj = find(tj, "sin")) term.sin_coeff = parse_matrix(*sj, w, path + ".sin");
            spec.terms.push_back(term);
        }
        model.width = w;
        model.variant = spec;
    }
    validate_model(model);
    return model;
}

ExperimentConfig parse_config(const json& doc, const ConfigOverrides& overrides) {
    if (!doc.is_object()) throw SchemaError({}, "config must be a JSON object");
    std::vector<std::string> bad;
    check_keys(doc, "", {"version", "seed", "model", "task", "params", "threads", "output"}, bad);

    ExperimentConfig cfg;
    std::string task;
    if (const json* t = find(doc, "task")) {
        if (!t->is_string()) throw SchemaError({"task"}, "expected a string");
        task = t->get<std::string>();
    }
    if (overrides.task) {
        if (!task.empty() && task != *overrides.task)
            throw SchemaError({"task"}, "config task '" + task + "' does not match subcommand '" + *overrides.task + "'");
        task = *overrides.task;
    }
    if (task.empty()) throw SchemaError({"task"}, "missing task");
    if (!task_keys().count(task)) throw SchemaError({"task"}, "unknown task '" + task + "'");

    const json empty = json::object();
    const json* params = find(doc, "params");
    if (params && !params->is_object()) throw SchemaError({"params"}, "params must be an object");
    const json* model = find(doc, "model");
    if (model) collect_model_keys(*model, bad);
    collect_param_keys(task, params ? *params : empty, bad);
    if (!bad.empty()) throw SchemaError(bad, "unknown keys");

    cfg.version = get_string(doc, "version", "", std::nullopt);
    if (cfg.version != kConfigVersion)
        throw SchemaError({"version"}, "version '" + cfg.version + "' does not match expected '" + kConfigVersion + "'");
    if (overrides.seed) {
        cfg.seed = *overrides.seed;
    } else {
        const json* s = find(doc, "seed");
        if (!s) throw SchemaError({"seed"}, "seed is mandatory (config key or --seed)");
        if (!is_count(*s)) throw SchemaError({"seed"}, "seed must be an unsigned 64-bit integer");
        cfg.seed = s->get<std::uint64_t>();
    }
    if (!model) throw SchemaError({"model"}, "missing model");
    cfg.model_json = *model;
    cfg.model = parse_model(*model);
    cfg.task = task;
    cfg.params = params ? *params : empty;
    cfg.threads = overrides.threads ? *overrides.threads : static_cast<int>(get_count(doc, "threads", "", 0));
    if (cfg.threads < 0) throw SchemaError({"threads"}, "threads must be >= 0");
    if (find(doc, "output")) cfg.output = get_string(doc, "output", "", std::nullopt);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config", "cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError({}, std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc, overrides);
}

json canonical_config(const ExperimentConfig& config) {
    return {{"version", config.version}, {"seed", config.seed}, {"model", config.model_json},
            {"task", config.task}, {"params", config.params}};
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

json RunManifest::to_json() const {
    json files = json::array();
    for (const auto& f : outputs) {
        json entry = {{"file", f.name}, {"sha256", f.sha256}};
        if (!f.columns.empty()) entry["columns"] = f.columns;
        files.push_back(entry);
    }
    return {{"config_hash", config_hash}, {"seed", seed}, {"task", task}, {"wall_time_seconds", wall_time},
            {"threads", threads}, {"library_version", library_version}, {"outputs", files}};
}

RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    Writer writer(out_dir);
    RunOptions options;
    options.threads = config.threads;
    OrbitSeed root{config.seed, {}};
    if (find(config.model_json, "phase")) root.phase = get_reals(config.model_json, "phase", "model", std::nullopt);
    Context ctx{config, config.params, options, root, OrbitSeed{derive_key(config.seed, kReferenceTag), {}}, writer, json::object()};
    task_table().at(config.task)(ctx);
    json summary = ctx.summary;
    summary["task"] = config.task;
    summary["seed"] = config.seed;
    std::string stem = config.task;
    std::replace(stem.begin(), stem.end(), '-', '_');
    writer.summary(stem + ".json", summary);

    RunManifest manifest;
    manifest.config_hash = sha256_hex(canonical_config(config).dump());
    manifest.seed = config.seed;
    manifest.task = config.task;
    manifest.threads = resolve_threads(config.threads);
    manifest.outputs = writer.files;
    manifest.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream(out_dir / "manifest.json") << manifest.to_json().dump(2) << "\n";
    return manifest;
}

json error_report(const std::exception& error, const ExperimentConfig* config) {
    json doc = {{"status", "error"}, {"message", error.what()}};
    if (const auto* s = dynamic_cast<const SchemaError*>(&error)) {
        doc["kind"] = "schema";
        doc["keys"] = s->keys();
    } else if (const auto* v = dynamic_cast<const ValidationError*>(&error)) {
        doc["kind"] = "validation";
        doc["operation"] = v->operation();
        doc["module"] = module_of(v->operation());
    } else if (const auto* n = dynamic_cast<const NumericError*>(&error)) {
        doc["kind"] = "numeric";
        doc["operation"] = n->operation();
        doc["module"] = module_of(n->operation());
    } else {
        doc["kind"] = "runtime";
    }
    if (config) {
        doc["task"] = config->task;
        doc["seed"] = config->seed;
        doc["inputs_digest"] = sha256_hex(canonical_config(*config).dump());
    }
    return doc;
}

}  // namespace cocycle
