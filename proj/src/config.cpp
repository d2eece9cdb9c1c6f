#include "qvi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qvi {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(trim(item));
    if (!s.empty() && s.back() == sep) out.push_back("");
    return out;
}

// Tracks key consumption and collects every violated key so the final
// diagnostic lists them all at once.
struct Reader {
    const ConfigMap& kv;
    std::set<std::string> used;
    std::vector<std::string> errors;

    bool has(const std::string& key) const { return kv.count(key) != 0; }

    std::string take(const std::string& key, const std::string& dflt = "") {
        auto it = kv.find(key);
        if (it == kv.end()) return dflt;
        used.insert(key);
        return it->second;
    }

    double num(const std::string& key, double dflt) {
        std::string s = take(key);
        if (s.empty()) return dflt;
        try {
            std::size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            errors.push_back(key + ": expected a number, got '" + s + "'");
            return dflt;
        }
    }

    int integer(const std::string& key, int dflt) {
        double v = num(key, dflt);
        if (v != std::floor(v))
            errors.push_back(key + ": expected an integer");
        return static_cast<int>(v);
    }

    std::vector<double> nums(const std::string& key,
                             const std::vector<double>& dflt = {}) {
        std::string s = take(key);
        if (s.empty()) return dflt;
        std::vector<double> out;
        for (const auto& tok : split(s, ',')) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                errors.push_back(key + ": bad list element '" + tok + "'");
            }
        }
        return out;
    }

    // Broadcasts a scalar or validates a d-element list.
    Vec vec(const std::string& key, int d, double dflt) {
        std::vector<double> v = nums(key, {dflt});
        if (v.size() == 1) return Vec::Constant(d, v[0]);
        if (static_cast<int>(v.size()) != d) {
            errors.push_back(key + ": expected 1 or " + std::to_string(d) +
                             " values");
            return Vec::Constant(d, dflt);
        }
        return Eigen::Map<Vec>(v.data(), d);
    }

    // Semicolon-separated list of comma-separated vectors.
    std::vector<Vec> vec_list(const std::string& key, int d) {
        std::string s = take(key);
        std::vector<Vec> out;
        if (s.empty()) return out;
        for (const auto& item : split(s, ';')) {
            std::vector<double> v;
            for (const auto& tok : split(item, ','))
                if (!tok.empty()) v.push_back(std::stod(tok));
            if (static_cast<int>(v.size()) != d) {
                errors.push_back(key + ": vector '" + item + "' is not " +
                                 std::to_string(d) + "-dimensional");
                continue;
            }
            out.push_back(Eigen::Map<Vec>(v.data(), d));
        }
        return out;
    }
};

using Scalar3 = std::function<double(double, const Vec&, const Vec&)>;

// Scalar coefficient catalogue shared by f, g (beta ignored) and parts of
// the dynamics: const, affine (c0 + <c, x>), quadratic in |x|, pwpoly.
Scalar3 scalar_catalogue(Reader& r, const std::string& sec, int d,
                         double dflt) {
    std::string kind = r.take(sec + ".kind", "const");
    if (kind == "const") {
        double c = r.num(sec + ".value", dflt);
        return [c](double, const Vec&, const Vec&) { return c; };
    }
    if (kind == "affine") {
        double c0 = r.num(sec + ".c0", 0.0);
        Vec c = r.vec(sec + ".c", d, 0.0);
        return [c0, c](double, const Vec& x, const Vec&) {
            return c0 + c.dot(x);
        };
    }
    if (kind == "quadratic") {
        double c0 = r.num(sec + ".c0", 0.0);
        double c1 = r.num(sec + ".c1", 0.0);
        double c2 = r.num(sec + ".c2", 0.0);
        return [c0, c1, c2](double, const Vec& x, const Vec&) {
            double n = x.norm();
            return c0 + c1 * n + c2 * n * n;
        };
    }
    if (kind == "pwpoly") {
        // 1-d piecewise polynomial: breaks = x0,...,xn; polyI = coeffs of
        // the polynomial in (x - xI) on segment I; clamped outside.
        std::vector<double> breaks = r.nums(sec + ".breaks");
        if (breaks.size() < 2) {
            r.errors.push_back(sec + ".breaks: need at least two breakpoints");
            return [](double, const Vec&, const Vec&) { return 0.0; };
        }
        std::vector<std::vector<double>> polys;
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
            polys.push_back(
                r.nums(sec + ".poly" + std::to_string(i), {0.0}));
        return [breaks, polys](double, const Vec& x, const Vec&) {
            double s = x[0];
            std::size_t i = 0;
            while (i + 2 < breaks.size() && s >= breaks[i + 1]) ++i;
            double u = s - breaks[i], acc = 0.0, pw = 1.0;
            for (double c : polys[i]) {
                acc += c * pw;
                pw *= u;
            }
            return acc;
        };
    }
    r.errors.push_back(sec + ".kind: unknown coefficient kind '" + kind + "'");
    return [](double, const Vec&, const Vec&) { return 0.0; };
}

LevyModel build_levy(Reader& r, int dim_z) {
    LevyModel lm;
    lm.dim_z = dim_z;
    std::string kind = r.take("levy.kind", "none");
    lm.delta = r.num("levy.delta", 1e-2);
    lm.eps_sim = r.num("levy.eps_sim", 1e-3);
    lm.p_star = r.num("levy.p_star", 2.0);
    lm.q_star = r.num("levy.q_star", 2.0);
    lm.quad.nodes_per_segment =
        r.integer("levy.quad_nodes", lm.quad.nodes_per_segment);
    lm.quad.radius = r.num("levy.quad_radius", 0.0);

    if (kind == "none") {
        lm.kind = LevyKind::None;
    } else if (kind == "atoms") {
        lm.kind = LevyKind::FiniteActivity;
        std::vector<double> z = r.nums("levy.z"), w = r.nums("levy.w");
        if (z.size() != w.size() || z.empty())
            r.errors.push_back("levy.z / levy.w: need matching non-empty lists");
        for (std::size_t i = 0; i < std::min(z.size(), w.size()); ++i)
            lm.atoms.push_back({vec1(z[i]), w[i]});
    } else if (kind == "merton") {
        lm.kind = LevyKind::FiniteActivity;
        double lambda = r.num("levy.lambda", 1.0);
        double m = r.num("levy.jump_mean", 0.0);
        double s = r.num("levy.jump_std", 0.1);
        if (s <= 0.0) r.errors.push_back("levy.jump_std: must be positive");
        lm.density = [lambda, m, s](double z) {
            double u = (z - m) / s;
            return lambda * std::exp(-0.5 * u * u) /
                   (s * 2.5066282746310002);
        };
    } else if (kind == "vg") {
        // Variance-gamma density c e^{-g_p z}/z (z>0), c e^{-g_n|z|}/|z| (z<0).
        lm.kind = LevyKind::InfiniteActivity;
        double c = r.num("levy.c", 1.0);
        double gp = r.num("levy.g_pos", 5.0);
        double gn = r.num("levy.g_neg", 5.0);
        if (c <= 0.0 || gp <= 0.0 || gn <= 0.0)
            r.errors.push_back("levy: vg parameters must be positive");
        lm.density = [c, gp, gn](double z) {
            return z > 0.0 ? c * std::exp(-gp * z) / z
                           : c * std::exp(-gn * -z) / -z;
        };
        lm.q_star = r.num("levy.q_star", 1.0);
    } else {
        r.errors.push_back("levy.kind: unknown kind '" + kind + "'");
    }
    return lm;
}

}  // namespace

ConfigMap parse_ini(const std::string& text) {
    ConfigMap out;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw Error("config line " + std::to_string(lineno) +
                            ": malformed section header '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + s + "'");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty())
            throw Error("config line " + std::to_string(lineno) +
                        ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full))
            throw Error("config line " + std::to_string(lineno) +
                        ": duplicate key '" + full + "'");
        out[full] = val;
    }
    return out;
}

std::string canonical_text(const ConfigMap& cfg) {
    std::string s;
    for (const auto& [k, v] : cfg) {  // std::map iterates in sorted key order
        s += k;
        s += " = ";
        s += v;
        s += '\n';
    }
    return s;
}

LoadedConfig load_config_text(const std::string& text) {
    LoadedConfig lc;
    lc.raw = parse_ini(text);
    lc.canonical = canonical_text(lc.raw);
    lc.hash = fnv1a(lc.canonical);

    Reader r{lc.raw, {}, {}};
    Problem& p = lc.problem;

    int sv = r.integer("schema_version", 1);
    if (sv != 1) throw Error("unsupported schema_version " + std::to_string(sv));

    // Horizon: exactly one of problem.T / problem.rho.
    bool has_T = r.has("problem.T"), has_rho = r.has("problem.rho");
    if (has_T && has_rho)
        throw Error("horizon ambiguous: both problem.T and problem.rho are set");
    if (!has_T && !has_rho)
        throw Error("horizon missing: set problem.T (finite horizon) or "
                    "problem.rho (discounted stationary)");
    if (has_T) {
        p.horizon = HorizonType::Parabolic;
        p.T = r.num("problem.T", 1.0);
        if (p.T <= 0.0) r.errors.push_back("problem.T: must be positive");
    } else {
        p.horizon = HorizonType::Elliptic;
        p.rho = r.num("problem.rho", 1.0);
        if (p.rho <= 0.0) r.errors.push_back("problem.rho: must be positive");
    }

    p.dim_x = r.integer("problem.dim_x", 1);
    p.dim_w = r.integer("problem.dim_w", p.dim_x);
    p.dim_z = r.integer("problem.dim_z", 1);
    p.growth_p = r.num("problem.growth_p", 2.0);
    p.fixed_cost_k0 = r.num("problem.fixed_cost_k0", 0.0);
    const int d = std::max(1, p.dim_x);

    p.box_min = r.vec("problem.box_min", d, -1.0);
    p.box_max = r.vec("problem.box_max", d, 1.0);

    // Domain S: whole space, or an open sub-box.
    std::string skind = r.take("problem.s", "all");
    if (skind == "all") {
        p.inside_S = [](const Vec&) { return true; };
    } else if (skind == "box") {
        Vec smin = r.vec("problem.s_min", d, -1.0);
        Vec smax = r.vec("problem.s_max", d, 1.0);
        p.inside_S = [smin, smax](const Vec& x) {
            for (int a = 0; a < x.size(); ++a)
                if (x[a] <= smin[a] || x[a] >= smax[a]) return false;
            return true;
        };
    } else {
        r.errors.push_back("problem.s: unknown domain kind '" + skind + "'");
        p.inside_S = [](const Vec&) { return true; };
    }

    // Dynamics.
    {
        std::string kind = r.take("mu.kind", "const");
        if (kind == "const") {
            Vec c = r.vec("mu.value", d, 0.0);
            p.mu = [c](double, const Vec&, const Vec&) { return c; };
        } else if (kind == "affine") {
            Vec a = r.vec("mu.a", d, 0.0);
            Vec b = r.vec("mu.b", d, 0.0);
            p.mu = [a, b](double, const Vec& x, const Vec&) {
                return Vec(a + b.cwiseProduct(x));
            };
        } else if (kind == "gbm") {
            double rate = r.num("mu.rate", 0.0);
            p.mu = [rate](double, const Vec& x, const Vec&) {
                return Vec(rate * x);
            };
        } else if (kind == "control") {
            // Drift equals the continuous control (dim_w must match dim_x).
            p.mu = [](double, const Vec&, const Vec& beta) { return beta; };
        } else {
            r.errors.push_back("mu.kind: unknown kind '" + kind + "'");
        }
    }
    {
        std::string kind = r.take("sigma.kind", "const");
        if (kind == "const") {
            Vec c = r.vec("sigma.value", d, 1.0);
            int m = p.dim_w;
            p.sigma = [c, d, m](double, const Vec&, const Vec&) {
                Mat s = Mat::Zero(d, m);
                for (int a = 0; a < std::min(d, m); ++a) s(a, a) = c[a];
                return s;
            };
        } else if (kind == "gbm") {
            double vol = r.num("sigma.vol", 0.2);
            int m = p.dim_w;
            p.sigma = [vol, d, m](double, const Vec& x, const Vec&) {
                Mat s = Mat::Zero(d, m);
                for (int a = 0; a < std::min(d, m); ++a) s(a, a) = vol * x[a];
                return s;
            };
        } else {
            r.errors.push_back("sigma.kind: unknown kind '" + kind + "'");
        }
    }
    {
        std::string kind = r.take("ell.kind", "none");
        if (kind == "none") {
            p.ell = nullptr;
        } else if (kind == "linear") {
            double c = r.num("ell.c", 1.0);
            int dz = p.dim_z;
            p.ell = [c, d, dz](double, const Vec&, const Vec&, const Vec& z) {
                Vec l = Vec::Zero(d);
                for (int a = 0; a < d; ++a) l[a] = c * z[std::min(a, dz - 1)];
                return l;
            };
        } else if (kind == "proportional") {
            double c = r.num("ell.c", 1.0);
            int dz = p.dim_z;
            p.ell = [c, dz](double, const Vec& x, const Vec&, const Vec& z) {
                Vec l = x;
                for (int a = 0; a < x.size(); ++a)
                    l[a] = c * x[a] * z[std::min(a, dz - 1)];
                return l;
            };
        } else {
            r.errors.push_back("ell.kind: unknown kind '" + kind + "'");
        }
    }

    // Profits and costs.
    p.f = scalar_catalogue(r, "f", d, 0.0);
    {
        Scalar3 g3 = scalar_catalogue(r, "g", d, 0.0);
        p.g = [g3](double t, const Vec& x) { return g3(t, x, Vec()); };
    }
    {
        std::string kind = r.take("k.kind", "fixed");
        double k0 = r.num("k.k0", std::max(p.fixed_cost_k0, 1.0));
        if (kind == "fixed") {
            p.K = [k0](double, const Vec&, const Vec&) { return -k0; };
        } else if (kind == "fixed_prop") {
            double c = r.num("k.c", 0.0);
            p.K = [k0, c](double, const Vec&, const Vec& zeta) {
                return -(k0 + c * zeta.norm());
            };
        } else if (kind == "quadratic") {
            double c = r.num("k.c", 0.0);
            p.K = [k0, c](double, const Vec&, const Vec& zeta) {
                return -(k0 + c * zeta.squaredNorm());
            };
        } else {
            r.errors.push_back("k.kind: unknown kind '" + kind + "'");
        }
        if (p.fixed_cost_k0 == 0.0 && !r.has("problem.fixed_cost_k0"))
            p.fixed_cost_k0 = k0;
    }
    {
        std::string kind = r.take("gamma.kind", "set");
        if (kind == "set") {
            p.Gamma = [](double, const Vec&, const Vec& zeta) { return zeta; };
        } else if (kind == "shift") {
            p.Gamma = [](double, const Vec& x, const Vec& zeta) {
                return Vec(x + zeta);
            };
        } else if (kind == "origin") {
            p.Gamma = [d](double, const Vec&, const Vec&) {
                return Vec(Vec::Zero(d));
            };
        } else {
            r.errors.push_back("gamma.kind: unknown kind '" + kind + "'");
        }
    }
    {
        std::string kind = r.take("z.kind", "list");
        if (kind == "list") {
            std::vector<Vec> zs = r.vec_list("z.values", d);
            if (zs.empty())
                r.errors.push_back("z.values: empty transaction set");
            p.Z = [zs](double, const Vec&) { return zs; };
        } else if (kind == "linspace") {
            double lo = r.num("z.lo", -1.0), hi = r.num("z.hi", 1.0);
            int n = r.integer("z.n", 5);
            if (n < 1 || d != 1)
                r.errors.push_back("z: linspace needs n >= 1 and dim_x = 1");
            std::vector<Vec> zs;
            for (int i = 0; i < n; ++i)
                zs.push_back(vec1(n == 1 ? lo : lo + (hi - lo) * i / (n - 1)));
            p.Z = [zs](double, const Vec&) { return zs; };
        } else if (kind == "origin") {
            std::vector<Vec> zs = {Vec::Zero(d)};
            p.Z = [zs](double, const Vec&) { return zs; };
        } else {
            r.errors.push_back("z.kind: unknown kind '" + kind + "'");
        }
    }
    {
        p.B = r.vec_list("b.values", p.dim_w);
        if (p.B.empty()) p.B = {Vec::Zero(p.dim_w)};
    }

    lc.levy = build_levy(r, p.dim_z);

    // Solver / grid / MC options.
    lc.options.tol = r.num("solver.tol", lc.options.tol);
    lc.options.max_outer = r.integer("solver.max_outer", lc.options.max_outer);
    {
        std::vector<double> nodes = r.nums("grid.nodes", {});
        if (nodes.empty()) {
            lc.grid_nodes.assign(d, 101);
        } else if (nodes.size() == 1) {
            lc.grid_nodes.assign(d, static_cast<int>(nodes[0]));
        } else if (static_cast<int>(nodes.size()) == d) {
            for (double n : nodes) lc.grid_nodes.push_back(static_cast<int>(n));
        } else {
            r.errors.push_back("grid.nodes: expected 1 or " +
                               std::to_string(d) + " entries");
            lc.grid_nodes.assign(d, 101);
        }
    }
    lc.n_time = r.integer("grid.n_time", 200);
    lc.mc_paths = static_cast<std::size_t>(r.num("mc.paths", 10000.0));
    lc.mc_dt = r.num("mc.dt", 0.0);
    lc.seed = static_cast<std::uint64_t>(r.num("mc.seed", 0.0));

    // Unknown keys are hard errors; report everything at once.
    std::vector<std::string> unknown;
    for (const auto& [k, v] : lc.raw)
        if (!r.used.count(k)) unknown.push_back(k);
    if (!unknown.empty() || !r.errors.empty()) {
        std::string msg = "config rejected:";
        for (const auto& k : unknown) msg += "\n  unknown key: " + k;
        for (const auto& e : r.errors) msg += "\n  " + e;
        throw Error(msg);
    }

    if (lc.levy.kind != LevyKind::None) lc.levy = prepare(lc.levy);
    return lc;
}

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return load_config_text(ss.str());
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

}  // namespace qvi
