#include "ftle/models.hpp"

#include "ftle/errors.hpp"
#include "ftle/format.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ftle {

namespace {

void require_dimension(const State& z, Eigen::Index n, const char* who) {
    if (z.size() != n) {
        throw ConfigError(std::string(who) + ": state has length " + std::to_string(z.size()) + ", expected " +
                          std::to_string(n));
    }
}

}  // namespace

State abc_vector_field(const State& z, double, const AbcParams& p) {
    require_dimension(z, 3, "abc");
    State out(3);
    out(0) = p.a * std::sin(z(2)) + p.c * std::cos(z(1));
    out(1) = p.b * std::sin(z(0)) + p.a * std::cos(z(2));
    out(2) = p.c * std::sin(z(1)) + p.b * std::cos(z(0));
    return out;
}

Matrix abc_jacobian(const State& z, double, const AbcParams& p) {
    require_dimension(z, 3, "abc");
    Matrix l = Matrix::Zero(3, 3);
    l(0, 1) = -p.c * std::sin(z(1));
    l(0, 2) = p.a * std::cos(z(2));
    l(1, 0) = p.b * std::cos(z(0));
    l(1, 2) = -p.a * std::sin(z(2));
    l(2, 0) = -p.b * std::sin(z(0));
    l(2, 1) = p.c * std::cos(z(1));
    return l;
}

std::vector<std::pair<std::string, std::string>> AbcFlow::parameters() const {
    return {{"A", format_double(params_.a)}, {"B", format_double(params_.b)}, {"C", format_double(params_.c)}};
}

CdvCoefficients cdv_coefficients(const CdvParams& p) {
    constexpr double pi = std::numbers::pi;
    constexpr double sqrt2 = std::numbers::sqrt2;
    const double b2 = p.b * p.b;
    CdvCoefficients k;
    for (int i = 0; i < 2; ++i) {
        const double m = i + 1.0;
        const double m2 = m * m;
        k.alpha[i] = 8.0 * sqrt2 / pi * m2 / (4.0 * m2 - 1.0) * (b2 + m2 - 1.0) / (b2 + m2);
        k.beta[i] = p.beta * b2 / (b2 + m2);
        k.delta[i] = 64.0 * sqrt2 / (15.0 * pi) * (b2 - m2 + 1.0) / (b2 + m2);
        k.gamma_star[i] = p.gamma * 4.0 * m / (4.0 * m2 - 1.0) * sqrt2 * p.b / pi;
        k.gamma[i] = p.gamma * 4.0 * m * m2 / (4.0 * m2 - 1.0) * sqrt2 * p.b / (pi * (b2 + m2));
    }
    k.epsilon = 16.0 * sqrt2 / (5.0 * pi);
    return k;
}

State cdv_vector_field(const State& z, double, const CdvParams& p, const CdvCoefficients& k) {
    require_dimension(z, 6, "cdv");
    const double c = p.damping;
    const double s1 = k.alpha[0] * z(0) - k.beta[0];
    const double s2 = k.alpha[1] * z(0) - k.beta[1];
    const double z6_partner = p.as_printed ? z(1) : z(4);
    State out(6);
    out(0) = k.gamma_star[0] * z(2) - c * (z(0) - p.z1_star);
    out(1) = -s1 * z(2) - c * z(1) - k.delta[0] * z(3) * z(5);
    out(2) = s1 * z(1) - k.gamma[0] * z(0) - c * z(2) + k.delta[0] * z(3) * z(4);
    out(3) = k.gamma_star[1] * z(5) - c * (z(3) - p.z4_star) + k.epsilon * (z(1) * z(5) - z(2) * z(4));
    out(4) = -s2 * z(5) - c * z(4) - k.delta[1] * z(3) * z(2);
    out(5) = s2 * z6_partner - k.gamma[1] * z(3) - c * z(5) + k.delta[1] * z(3) * z(1);
    return out;
}

Matrix cdv_jacobian(const State& z, double, const CdvParams& p, const CdvCoefficients& k) {
    require_dimension(z, 6, "cdv");
    const double c = p.damping;
    const double a1 = k.alpha[0], a2 = k.alpha[1];
    const double d1 = k.delta[0], d2 = k.delta[1];
    const double eps = k.epsilon;
    const double s1 = a1 * z(0) - k.beta[0];
    const double s2 = a2 * z(0) - k.beta[1];
    Matrix l = Matrix::Zero(6, 6);

    l(0, 0) = -c;
    l(0, 2) = k.gamma_star[0];

    l(1, 0) = -a1 * z(2);
    l(1, 1) = -c;
    l(1, 2) = -s1;
    l(1, 3) = -d1 * z(5);
    l(1, 5) = -d1 * z(3);

    l(2, 0) = a1 * z(1) - k.gamma[0];
    l(2, 1) = s1;
    l(2, 2) = -c;
    l(2, 3) = d1 * z(4);
    l(2, 4) = d1 * z(3);

    l(3, 1) = eps * z(5);
    l(3, 2) = -eps * z(4);
    l(3, 3) = -c;
    l(3, 4) = -eps * z(2);
    l(3, 5) = k.gamma_star[1] + eps * z(1);

    l(4, 0) = -a2 * z(5);
    l(4, 2) = -d2 * z(3);
    l(4, 3) = -d2 * z(2);
    l(4, 4) = -c;
    l(4, 5) = -s2;

    l(5, 1) = d2 * z(3);
    l(5, 3) = -k.gamma[1] + d2 * z(1);
    l(5, 5) = -c;
    if (p.as_printed) {
        l(5, 0) = a2 * z(1);
        l(5, 1) += s2;
    } else {
        l(5, 0) = a2 * z(4);
        l(5, 4) = s2;
    }
    return l;
}

std::vector<std::pair<std::string, std::string>> CdvModel::parameters() const {
    return {{"z1_star", format_double(params_.z1_star)},
            {"z4_star", format_double(params_.z4_star)},
            {"C", format_double(params_.damping)},
            {"beta", format_double(params_.beta)},
            {"gamma", format_double(params_.gamma)},
            {"b", format_double(params_.b)},
            {"cdv_as_printed", params_.as_printed ? "true" : "false"}};
}

LinearSystem::LinearSystem(Matrix a) : a_(std::move(a)) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) throw ConfigError("linear: matrix must be square and non-empty");
    if (!a_.allFinite()) throw ConfigError("linear: matrix has non-finite entries");
}

std::vector<std::pair<std::string, std::string>> LinearSystem::parameters() const {
    std::ostringstream os;
    os << "rows:";
    for (Eigen::Index i = 0; i < a_.rows(); ++i) {
        if (i) os << ';';
        for (Eigen::Index j = 0; j < a_.cols(); ++j) {
            if (j) os << ',';
            os << format_double(a_(i, j));
        }
    }
    return {{"matrix", os.str()}};
}

BandedLinearSystem::BandedLinearSystem(Eigen::Index n, int half_bandwidth, Matrix diagonals)
    : n_(n), half_bandwidth_(half_bandwidth), diagonals_(std::move(diagonals)) {
    if (n_ <= 0 || half_bandwidth_ < 0) throw ConfigError("banded: invalid size");
    if (diagonals_.rows() != 2 * half_bandwidth_ + 1 || diagonals_.cols() != n_) {
        throw ConfigError("banded: diagonal storage must be (2w+1) x n");
    }
}

State BandedLinearSystem::vector_field(const State& z, double t) const { return apply_jacobian(z, t, z); }

Matrix BandedLinearSystem::jacobian(const State&, double) const {
    Matrix a = Matrix::Zero(n_, n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
        for (int k = 0; k <= 2 * half_bandwidth_; ++k) {
            const Eigen::Index j = i + k - half_bandwidth_;
            if (j >= 0 && j < n_) a(i, j) = diagonals_(k, i);
        }
    }
    return a;
}

Matrix BandedLinearSystem::apply_jacobian(const State&, double, const Matrix& m) const {
    Matrix out = Matrix::Zero(n_, m.cols());
    for (int k = 0; k <= 2 * half_bandwidth_; ++k) {
        const Eigen::Index offset = k - half_bandwidth_;
        const Eigen::Index first = std::max<Eigen::Index>(0, -offset);
        const Eigen::Index last = std::min<Eigen::Index>(n_, n_ - offset);
        if (last <= first) continue;
        const Eigen::Index len = last - first;
        out.middleRows(first, len).noalias() +=
            diagonals_.row(k).segment(first, len).transpose().asDiagonal() * m.middleRows(first + offset, len);
    }
    return out;
}

BandedLinearSystem make_random_stable_banded(Eigen::Index n, int half_bandwidth, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    const int width = 2 * half_bandwidth + 1;
    Matrix diagonals = Matrix::Zero(width, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < width; ++k) {
            const Eigen::Index j = i + k - half_bandwidth;
            if (k != half_bandwidth && j >= 0 && j < n) diagonals(k, i) = coeff(rng);
        }
    }
    // Gershgorin on the symmetric part: diagonal below minus the absolute row sum.
    for (Eigen::Index i = 0; i < n; ++i) {
        double row = 0.0;
        for (int k = 0; k < width; ++k) {
            const Eigen::Index j = i + k - half_bandwidth;
            if (k == half_bandwidth || j < 0 || j >= n) continue;
            const int mirror = 2 * half_bandwidth - k;
            row += 0.5 * std::abs(diagonals(k, i) + diagonals(mirror, j));
        }
        diagonals(half_bandwidth, i) = -(row + 0.1);
    }
    return BandedLinearSystem(n, half_bandwidth, std::move(diagonals));
}

Matrix parse_matrix_spec(const std::string& spec) {
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream is(s);
        while (std::getline(is, cur, sep)) parts.push_back(cur);
        if (!s.empty() && s.back() == sep) parts.emplace_back();
        return parts;
    };
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw ConfigError("matrix: expected 'diag:...' or 'rows:...', got '" + spec + "'");
    const std::string kind = spec.substr(0, colon);
    const std::string body = spec.substr(colon + 1);
    if (kind == "diag") {
        const auto parts = split(body, ',');
        if (parts.empty()) throw ConfigError("matrix: empty diagonal");
        Matrix a = Matrix::Zero(static_cast<Eigen::Index>(parts.size()), static_cast<Eigen::Index>(parts.size()));
        for (std::size_t i = 0; i < parts.size(); ++i) a(i, i) = parse_double(parts[i], "matrix diagonal entry");
        return a;
    }
    if (kind == "rows") {
        const auto rows = split(body, ';');
        const auto n = static_cast<Eigen::Index>(rows.size());
        if (n == 0) throw ConfigError("matrix: no rows");
        Matrix a(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto entries = split(rows[i], ',');
            if (static_cast<Eigen::Index>(entries.size()) != n) {
                throw ConfigError("matrix: row " + std::to_string(i + 1) + " has " + std::to_string(entries.size()) +
                                  " entries, expected " + std::to_string(n));
            }
            for (Eigen::Index j = 0; j < n; ++j) a(i, j) = parse_double(entries[j], "matrix entry");
        }
        return a;
    }
    throw ConfigError("matrix: unknown kind '" + kind + "' (use diag or rows)");
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

void reject_unknown(const ParamMap& params, std::initializer_list<const char*> known, const std::string& model) {
    for (const auto& [key, value] : params) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("model '" + model + "' has no parameter '" + key + "'");
    }
}

}  // namespace

ModelRegistry ModelRegistry::with_builtin_models() {
    ModelRegistry reg;
    reg.add("abc", [](const ParamMap& params) -> SystemPtr {
        reject_unknown(params, {"A", "B", "C"}, "abc");
        AbcParams p;
        if (auto it = params.find("A"); it != params.end()) p.a = parse_double(it->second, "A");
        if (auto it = params.find("B"); it != params.end()) p.b = parse_double(it->second, "B");
        if (auto it = params.find("C"); it != params.end()) p.c = parse_double(it->second, "C");
        return std::make_shared<AbcFlow>(p);
    });
    reg.add("cdv", [](const ParamMap& params) -> SystemPtr {
        reject_unknown(params, {"z1_star", "z4_star", "C", "beta", "gamma", "b", "cdv_as_printed"}, "cdv");
        CdvParams p;
        auto num = [&](const char* key, double& field) {
            if (auto it = params.find(key); it != params.end()) field = parse_double(it->second, key);
        };
        num("z1_star", p.z1_star);
        num("z4_star", p.z4_star);
        num("C", p.damping);
        num("beta", p.beta);
        num("gamma", p.gamma);
        num("b", p.b);
        if (auto it = params.find("cdv_as_printed"); it != params.end()) {
            p.as_printed = parse_bool(it->second, "cdv_as_printed");
        }
        return std::make_shared<CdvModel>(p);
    });
    reg.add("linear", [](const ParamMap& params) -> SystemPtr {
        reject_unknown(params, {"matrix"}, "linear");
        auto it = params.find("matrix");
        if (it == params.end()) throw ConfigError("model 'linear' requires a matrix (e.g. --matrix diag:1,-1)");
        return std::make_shared<LinearSystem>(parse_matrix_spec(it->second));
    });
    return reg;
}

void ModelRegistry::add(const std::string& name, ModelFactory factory) { factories_[name] = std::move(factory); }

std::vector<std::string> ModelRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
}

SystemPtr ModelRegistry::make(const std::string& name, const ParamMap& params) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) {
        std::string known;
        for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown model '" + name + "' (known: " + known + ")");
    }
    return it->second(params);
}

}  // namespace ftle
