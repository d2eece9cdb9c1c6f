#include "qvi/problem.hpp"

#include <cmath>
#include <sstream>

namespace qvi {

namespace {

double halton(std::size_t i, int base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * (i % base);
        i /= base;
    }
    return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

// Low-discrepancy cloud over the bounding box; the seed offsets the start
// index so the cloud is deterministic per seed.
std::vector<Vec> sample_cloud(const Problem& p, unsigned seed, int n) {
    std::vector<Vec> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        Vec x(p.dim_x);
        for (int a = 0; a < p.dim_x; ++a) {
            double u = halton(static_cast<std::size_t>(i) + 1 + seed,
                              kPrimes[a % 10]);
            x[a] = p.box_min[a] + u * (p.box_max[a] - p.box_min[a]);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

bool finite(double x) { return std::isfinite(x); }
bool finite(const Vec& v) { return v.allFinite(); }
bool finite(const Mat& m) { return m.allFinite(); }

std::string fmt_point(const Vec& x) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

}  // namespace

bool ValidationReport::all_passed() const {
    for (const auto& it : items)
        if (it.status == ValidationItem::Status::Fail) return false;
    return true;
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto& it : items) {
        const char* s = it.status == ValidationItem::Status::Pass ? "pass"
                        : it.status == ValidationItem::Status::Fail ? "FAIL"
                        : "unverifiable-by-sampling";
        os << it.name << ": " << s;
        if (!it.detail.empty()) os << " (" << it.detail << ")";
        if (it.sample) os << " at " << fmt_point(*it.sample);
        os << "\n";
    }
    os << "empirical Lipschitz: mu " << lipschitz_mu << ", sigma "
       << lipschitz_sigma << "\n";
    return os.str();
}

ValidationReport validate(const Problem& p, unsigned seed, int samples) {
    if (p.B.empty()) throw Error("validate: B is empty");
    for (int a = 0; a < p.dim_x; ++a)
        if (!(p.box_max[a] > p.box_min[a]))
            throw Error("validate: degenerate bounding box");

    ValidationReport rep;
    auto cloud = sample_cloud(p, seed, samples);
    std::vector<double> tgrid;
    if (p.horizon == HorizonType::Parabolic)
        for (int i = 0; i <= 4; ++i) tgrid.push_back(p.T * i / 4);
    else
        tgrid.push_back(0.0);

    // (V3): mu, sigma, ell, f evaluate finitely everywhere sampled.
    ValidationItem v3{"(V3) mu/sigma/ell/f finite"};
    Vec z_probe = Vec::Constant(p.dim_z, 0.5);
    for (const auto& x : cloud) {
        for (const auto& beta : p.B) {
            double t = tgrid[fnv1a(&x[0], sizeof(double)) % tgrid.size()];
            if (!finite(p.mu(t, x, beta)) || !finite(p.sigma(t, x, beta)) ||
                !finite(p.f(t, x, beta)) ||
                (p.ell && !finite(p.ell(t, x, beta, z_probe)))) {
                v3.status = ValidationItem::Status::Fail;
                v3.detail = "non-finite coefficient value";
                v3.sample = x;
                break;
            }
        }
        if (v3.status == ValidationItem::Status::Fail) break;
    }
    rep.items.push_back(v3);

    // (V2): Z(t,x) non-empty wherever sampled -- hard error on violation.
    ValidationItem v2{"(V2) transaction set non-empty"};
    for (const auto& x : cloud) {
        for (double t : tgrid) {
            if (p.Z(t, x).empty())
                throw Error("empty transaction set at " + fmt_point(x));
        }
    }
    // Spot-check Hausdorff-continuity: candidate lists at adjacent cloud
    // points should not differ wildly in size.
    for (std::size_t i = 0; i + 1 < std::min<std::size_t>(cloud.size(), 64); ++i) {
        auto a = p.Z(tgrid[0], cloud[i]);
        auto b = p.Z(tgrid[0], cloud[i + 1]);
        if (a.size() != b.size()) {
            v2.status = ValidationItem::Status::Unverifiable;
            v2.detail = "candidate list size varies across nodes";
            break;
        }
    }
    rep.items.push_back(v2);

    // (V1): Gamma, K continuous -- finite sampling only.
    ValidationItem v1{"(V1) Gamma/K finite on candidates"};
    for (std::size_t i = 0; i < cloud.size(); i += 16) {
        const auto& x = cloud[i];
        for (double t : tgrid) {
            for (const auto& z : p.Z(t, x)) {
                if (!finite(p.Gamma(t, x, z)) || !finite(p.K(t, x, z))) {
                    v1.status = ValidationItem::Status::Fail;
                    v1.sample = x;
                }
            }
        }
    }
    rep.items.push_back(v1);

    // (L2): fixed-cost condition when declared.
    if (p.fixed_cost_k0 > 0.0) {
        ValidationItem l2{"(L2) K <= -k0 < 0"};
        for (std::size_t i = 0; i < cloud.size(); i += 8) {
            const auto& x = cloud[i];
            for (double t : tgrid) {
                for (const auto& z : p.Z(t, x)) {
                    if (p.K(t, x, z) > -p.fixed_cost_k0 + 1e-15) {
                        l2.status = ValidationItem::Status::Fail;
                        std::ostringstream os;
                        os << "K = " << p.K(t, x, z) << " > -k0 = "
                           << -p.fixed_cost_k0;
                        l2.detail = os.str();
                        l2.sample = x;
                    }
                }
            }
        }
        rep.items.push_back(l2);
    }

    // Empirical Lipschitz constants by pairwise difference quotients:
    // consecutive cloud points plus short displacements (catches local
    // blowup such as sqrt(|x|) near 0).
    double lip_mu = 0.0, lip_sigma = 0.0;
    Vec worst_mu;
    auto consider = [&](const Vec& x, const Vec& y) {
        double dist = (x - y).norm();
        if (dist < 1e-14) return;
        for (const auto& beta : p.B) {
            double dm = (p.mu(tgrid[0], x, beta) - p.mu(tgrid[0], y, beta)).norm() / dist;
            double ds = (p.sigma(tgrid[0], x, beta) - p.sigma(tgrid[0], y, beta)).norm() / dist;
            if (dm > lip_mu) { lip_mu = dm; worst_mu = x; }
            lip_sigma = std::max(lip_sigma, ds);
        }
    };
    for (std::size_t i = 0; i + 1 < cloud.size(); ++i)
        consider(cloud[i], cloud[i + 1]);
    double diag = (p.box_max - p.box_min).norm();
    for (std::size_t i = 0; i < cloud.size(); i += 4) {
        for (double eps : {1e-3, 1e-5, 1e-7}) {
            Vec y = cloud[i];
            y[0] = std::min(y[0] + eps * diag, p.box_max[0]);
            consider(cloud[i], y);
        }
    }
    rep.lipschitz_mu = lip_mu;
    rep.lipschitz_sigma = lip_sigma;

    ValidationItem lip{"(eq_conds_ex_eind_SDE) Lipschitz estimate"};
    // A cloud-refined difference quotient far above the coarse pairwise one
    // indicates a non-Lipschitz coefficient.
    double coarse = 0.0;
    for (std::size_t i = 0; i + 1 < cloud.size(); i += 2) {
        for (const auto& beta : p.B) {
            double dist = (cloud[i] - cloud[i + 1]).norm();
            if (dist < 1e-9) continue;
            coarse = std::max(coarse,
                (p.mu(tgrid[0], cloud[i], beta) - p.mu(tgrid[0], cloud[i + 1], beta)).norm() / dist);
        }
    }
    if (lip_mu > 50.0 * std::max(coarse, 1e-12) && lip_mu > 1.0) {
        lip.status = ValidationItem::Status::Fail;
        lip.detail = "difference quotients grow unboundedly under refinement";
        lip.sample = worst_mu;
    } else if (coarse == 0.0 && lip_mu == 0.0) {
        lip.detail = "constant coefficients";
    }
    rep.items.push_back(lip);

    return rep;
}

namespace {

// Accepts either plainly time-independent data (returns false) or data of
// the discounted form e^{-rho t} h(x) (returns true); rejects anything else.
bool discounted_form(const char* name, double rho,
                     const std::function<double(double, const Vec&)>& h,
                     const std::vector<Vec>& pts) {
    bool plain = true, discounted = true;
    for (const auto& x : pts) {
        double base = h(0.0, x);
        for (double t : {0.25, 0.7, 1.3}) {
            double val = h(t, x);
            double tol = 1e-10 * (1.0 + std::abs(base));
            if (std::abs(val - base) > tol) plain = false;
            if (std::abs(std::exp(rho * t) * val - base) > tol) discounted = false;
        }
    }
    if (plain) return false;
    if (discounted) return true;
    throw Error(std::string("to_elliptic: ") + name +
                " is neither time-independent nor of the e^{-rho t} form");
}

}  // namespace

Problem to_elliptic(const Problem& p, double rho) {
    if (p.horizon != HorizonType::Parabolic)
        throw Error("to_elliptic: input must be parabolic");
    if (!(rho > 0.0))
        throw Error("to_elliptic: requires rho > 0 (condition (L1))");

    auto pts = sample_cloud(p, 7, 32);
    // Dynamics must be t-independent outright.
    for (const auto& x : pts) {
        for (const auto& beta : p.B) {
            if ((p.mu(0.0, x, beta) - p.mu(0.9, x, beta)).norm() > 1e-12 ||
                (p.sigma(0.0, x, beta) - p.sigma(0.9, x, beta)).norm() > 1e-12)
                throw Error("to_elliptic: time-dependent dynamics");
        }
    }
    Vec beta0 = p.B.front();
    discounted_form("f", rho,
        [&](double t, const Vec& x) { return p.f(t, x, beta0); }, pts);
    discounted_form("g", rho, p.g, pts);
    {
        auto zs = p.Z(0.0, pts.front());
        if (!zs.empty())
            discounted_form("K", rho,
                [&](double t, const Vec& y) { return p.K(t, y, zs.front()); },
                pts);
    }

    Problem e = p;
    e.horizon = HorizonType::Elliptic;
    e.rho = rho;
    e.T = 0.0;
    e.f = [f = p.f](double, const Vec& x, const Vec& b) { return f(0.0, x, b); };
    e.g = [g = p.g](double, const Vec& x) { return g(0.0, x); };
    e.K = [K = p.K](double, const Vec& x, const Vec& z) { return K(0.0, x, z); };
    e.Gamma = [G = p.Gamma](double, const Vec& x, const Vec& z) { return G(0.0, x, z); };
    e.Z = [Z = p.Z](double, const Vec& x) { return Z(0.0, x); };
    e.mu = [m = p.mu](double, const Vec& x, const Vec& b) { return m(0.0, x, b); };
    e.sigma = [s = p.sigma](double, const Vec& x, const Vec& b) { return s(0.0, x, b); };
    if (p.ell)
        e.ell = [l = p.ell](double, const Vec& x, const Vec& b, const Vec& z) {
            return l(0.0, x, b, z);
        };
    return e;
}

Problem lift_to_parabolic(const Problem& p, double T) {
    if (p.horizon != HorizonType::Elliptic)
        throw Error("lift_to_parabolic: input must be elliptic");
    if (!(T > 0.0)) throw Error("lift_to_parabolic: T > 0 required");
    double rho = p.rho;
    Problem q = p;
    q.horizon = HorizonType::Parabolic;
    q.T = T;
    q.rho = 0.0;
    q.f = [f = p.f, rho](double t, const Vec& x, const Vec& b) {
        return std::exp(-rho * t) * f(0.0, x, b);
    };
    q.g = [g = p.g, rho](double t, const Vec& x) {
        return std::exp(-rho * t) * g(0.0, x);
    };
    q.K = [K = p.K, rho](double t, const Vec& x, const Vec& z) {
        return std::exp(-rho * t) * K(0.0, x, z);
    };
    return q;
}

}  // namespace qvi
