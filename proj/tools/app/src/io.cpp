#include <mrgl_app/io.hpp>
#include <mrgl/errors.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mrgl::app {

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int line_of_offset(const std::string& text, std::size_t offset)
{
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Line of the first occurrence of "key" in the text, or 0 if absent.
int key_line(const std::string& text, const std::string& key)
{
    const auto pos = text.find('"' + key + '"');
    return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

[[noreturn]] void fail_at(const std::string& text, const std::string& key, const std::string& what)
{
    const int line = key_line(text, key);
    throw input_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what);
}

template <class T>
T get_field(const json& obj, const std::string& text, const std::string& key)
{
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail_at(text, key, "field \"" + key + "\" has the wrong type");
    }
}

double parse_number(const std::string& cell, int line, int col)
{
    double v = 0.0;
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\r')) --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e)
        throw input_error("line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": not a number: '" + cell + "'");
    return v;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s)
{
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && s[i] == ' ') ++i;
    return s.substr(i);
}

json vector_json(const Eigen::VectorXd& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd vector_from_json(const json& a)
{
    const auto vals = a.get<std::vector<double>>();
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
    return v;
}

} // namespace

std::string to_string(DesignKind d)
{
    return d == DesignKind::IidUniform ? "iid_uniform" : "correlated_uniform";
}

DesignKind parse_design_kind(const std::string& s)
{
    if (s == "iid_uniform" || s == "uniform") return DesignKind::IidUniform;
    if (s == "correlated_uniform") return DesignKind::CorrelatedUniform;
    throw input_error("unknown design '" + s + "' (expected iid_uniform or correlated_uniform)");
}

ScenarioFile parse_scenario(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw input_error("line " + std::to_string(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) throw input_error("line 1: scenario must be a JSON object");

    static const std::set<std::string> known{
        "n", "p", "s0", "alpha", "sigma", "design", "seed", "depth", "correlation", "eps",
        "k_star", "amplitude", "random_scale", "random_support", "family", "n_grid",
        "replicates", "target_exponent", "alpha_star", "oos_samples"};
    for (const auto& item : j.items())
        if (!known.count(item.key())) fail_at(text, item.key(), "unknown field \"" + item.key() + "\"");

    ScenarioFile f;
    auto& c = f.config;
    const bool study = j.contains("n_grid");
    // Missing fields are reported at the closing brace of the object.
    const std::string end_line = "line " + std::to_string(line_of_offset(text, text.rfind('}'))) + ": ";
    for (const char* key : {"p", "s0", "alpha", "sigma", "design", "seed"})
        if (!j.contains(key)) throw input_error(end_line + "missing required field \"" + key + "\"");
    if (!study && !j.contains("n")) throw input_error(end_line + "missing required field \"n\"");

    auto check = [&](bool ok, const std::string& key, const std::string& what) {
        if (!ok) fail_at(text, key, what);
    };
    if (j.contains("n")) {
        c.n = get_field<int>(j, text, "n");
        check(c.n >= 2, "n", "n must be >= 2");
    }
    c.p = get_field<int>(j, text, "p");
    check(c.p >= 1, "p", "p must be >= 1");
    c.s0 = get_field<int>(j, text, "s0");
    check(c.s0 >= 0 && c.s0 <= c.p, "s0", "s0 must lie in [0, p]");
    c.alpha = get_field<double>(j, text, "alpha");
    check(c.alpha > 0.5, "alpha", "alpha must exceed 1/2");
    c.sigma = get_field<double>(j, text, "sigma");
    check(c.sigma >= 0.0 && std::isfinite(c.sigma), "sigma", "sigma must be >= 0");
    try {
        c.design = parse_design_kind(get_field<std::string>(j, text, "design"));
    } catch (const input_error& e) {
        fail_at(text, "design", e.what());
    }
    check(j.at("seed").is_number_unsigned() || (j.at("seed").is_number_integer() && j.at("seed").get<long long>() >= 0),
          "seed", "seed must be a non-negative integer");
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("depth") && !j.at("depth").is_null()) {
        c.depth = get_field<int>(j, text, "depth");
        check(c.depth >= 0, "depth", "depth must be >= 0");
    }
    if (j.contains("correlation")) {
        c.correlation = get_field<double>(j, text, "correlation");
        check(c.correlation > -1.0 && c.correlation < 1.0, "correlation",
              "correlation must lie in (-1, 1)");
    }
    if (j.contains("eps")) {
        c.eps = get_field<double>(j, text, "eps");
        check(c.eps > 0.0 && c.eps <= 1.0, "eps", "eps must lie in (0, 1]");
    }
    if (j.contains("k_star")) {
        c.k_star = get_field<int>(j, text, "k_star");
        check(c.k_star >= 0, "k_star", "k_star must be >= 0");
    }
    if (j.contains("amplitude")) {
        c.truth.amplitude = get_field<double>(j, text, "amplitude");
        check(c.truth.amplitude >= 0.0, "amplitude", "amplitude must be >= 0");
    }
    if (j.contains("random_scale")) c.truth.random_scale = get_field<bool>(j, text, "random_scale");
    if (j.contains("random_support"))
        c.truth.random_support = get_field<bool>(j, text, "random_support");
    if (j.contains("family")) {
        try {
            c.family = parse_basis_family(get_field<std::string>(j, text, "family"));
        } catch (const input_error& e) {
            fail_at(text, "family", e.what());
        }
    }
    if (study) {
        f.n_grid = get_field<std::vector<int>>(j, text, "n_grid");
        check(f.n_grid.size() >= 3, "n_grid", "n_grid needs at least 3 sample sizes");
        for (std::size_t i = 0; i < f.n_grid.size(); ++i) {
            check(f.n_grid[i] >= 2, "n_grid", "n_grid entries must be >= 2");
            check(i == 0 || f.n_grid[i] > f.n_grid[i - 1], "n_grid",
                  "n_grid must be strictly increasing");
        }
        if (!j.contains("n")) c.n = f.n_grid.back();
    }
    if (j.contains("replicates")) {
        f.replicates = get_field<int>(j, text, "replicates");
        check(f.replicates >= 1, "replicates", "replicates must be >= 1");
    }
    if (j.contains("target_exponent")) {
        f.target_exponent = get_field<double>(j, text, "target_exponent");
        f.has_target = true;
    }
    if (j.contains("alpha_star")) {
        f.alpha_star = get_field<double>(j, text, "alpha_star");
        check(f.alpha_star > 0.0, "alpha_star", "alpha_star must be positive");
    }
    if (j.contains("oos_samples")) {
        f.oos_samples = get_field<int>(j, text, "oos_samples");
        check(f.oos_samples >= 2, "oos_samples", "oos_samples must be >= 2");
    }
    return f;
}

ScenarioFile read_scenario(const fs::path& path)
{
    try {
        return parse_scenario(slurp(path));
    } catch (const input_error& e) {
        throw input_error(path.string() + ": " + e.what());
    }
}

Dataset read_dataset(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw input_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw input_error(path.string() + ": empty file");
    const auto header = split_csv(line);
    int p = 0;
    while (p < static_cast<int>(header.size()) && trim(header[p]) == "x_" + std::to_string(p + 1)) ++p;
    if (p == 0) throw input_error(path.string() + ": line 1: header must start with x_1");
    Dataset d;
    int y_col = -1, f_col = -1;
    for (int c = p; c < static_cast<int>(header.size()); ++c) {
        const std::string h = trim(header[c]);
        if (h == "y" && y_col < 0)
            y_col = c;
        else if (h == "f_star" && f_col < 0)
            f_col = c;
        else
            throw input_error(path.string() + ": line 1: unexpected column '" + h + "'");
    }
    d.has_y = y_col >= 0;
    d.has_f_star = f_col >= 0;
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw input_error(path.string() + ": line " + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields, found " +
                              std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            try {
                row.push_back(parse_number(cells[c], lineno, static_cast<int>(c) + 1));
            } catch (const input_error& e) {
                throw input_error(path.string() + ": " + e.what());
            }
        }
        rows.push_back(std::move(row));
    }
    const auto n = static_cast<Eigen::Index>(rows.size());
    if (n == 0) throw input_error(path.string() + ": no data rows");
    d.X.resize(n, p);
    d.y = Eigen::VectorXd::Zero(n);
    d.f_star = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < p; ++c) d.X(i, c) = rows[i][c];
        if (y_col >= 0) d.y(i) = rows[i][y_col];
        if (f_col >= 0) d.f_star(i) = rows[i][f_col];
    }
    return d;
}

void write_dataset(const fs::path& path, const SimData& data)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    const auto p = data.X.cols();
    for (Eigen::Index c = 0; c < p; ++c) out << "x_" << c + 1 << ',';
    out << "y,f_star\n";
    for (Eigen::Index i = 0; i < data.X.rows(); ++i) {
        for (Eigen::Index c = 0; c < p; ++c) out << format_double(data.X(i, c)) << ',';
        out << format_double(data.y(i)) << ',' << format_double(data.f_star(i)) << '\n';
    }
}

json truth_to_json(const TruthSpec& t)
{
    json j;
    j["p"] = t.p;
    j["k_star"] = t.k_star;
    j["depth"] = t.depth;
    j["family"] = mrgl::to_string(t.family);
    j["support"] = t.support;
    j["alpha"] = t.alpha;
    j["scale"] = t.scale;
    j["g_max"] = t.g_max;
    json coeffs = json::object();
    for (int comp : t.support)
        for (int k = t.k_star; k <= t.depth; ++k)
            coeffs[mrgl::to_string(GroupKey{comp, k})] = vector_json(t.coeffs[comp - 1][k - t.k_star]);
    j["coefficients"] = coeffs;
    return j;
}

TruthSpec truth_from_json(const json& j)
{
    try {
        const int p = j.at("p").get<int>();
        const int k_star = j.at("k_star").get<int>();
        const int depth = j.at("depth").get<int>();
        std::vector<std::vector<Eigen::VectorXd>> coeffs(p);
        for (int comp : j.at("support").get<std::vector<int>>()) {
            require(comp >= 1 && comp <= p, "support entry out of range");
            for (int k = k_star; k <= depth; ++k)
                coeffs[comp - 1].push_back(
                    vector_from_json(j.at("coefficients").at(mrgl::to_string(GroupKey{comp, k}))));
        }
        TruthSpec t = make_truth_from_blocks(p, k_star, depth, std::move(coeffs),
                                             parse_basis_family(j.at("family").get<std::string>()));
        if (j.contains("alpha")) t.alpha = j.at("alpha").get<std::vector<double>>();
        if (j.contains("scale")) t.scale = j.at("scale").get<std::vector<double>>();
        if (j.contains("g_max")) t.g_max = j.at("g_max").get<double>();
        return t;
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed truth JSON: ") + e.what());
    }
}

json schedule_to_json(const ResolutionScheme& scheme, const PenaltySchedule& s)
{
    json j;
    j["sigma"] = s.sigma;
    j["eps"] = s.eps;
    j["A0"] = s.A0;
    j["lambda0"] = s.lambda0;
    j["k_star"] = scheme.k_star;
    j["k_max"] = scheme.k_max;
    json lam = json::object();
    for (int g = 0; g < scheme.num_groups(); ++g) lam[mrgl::to_string(scheme.groups[g])] = s.lambda[g];
    j["lambda"] = lam;
    return j;
}

json kkt_to_json(const KktReport& k)
{
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
    return {{"inactive_max_ratio", num(k.inactive_max_ratio)},
            {"active_max_violation", num(k.active_max_violation)},
            {"worst_inactive", mrgl::to_string(k.worst_inactive)},
            {"worst_active", mrgl::to_string(k.worst_active)}};
}

json fit_to_json(const FitResult& fit, const PenaltySchedule& schedule, LossVariant loss)
{
    const auto& sc = fit.scheme;
    json j;
    std::vector<int> kinds;
    for (const auto& k : sc.kinds) kinds.push_back(k.d_star);
    j["scheme"] = {{"p", sc.p()}, {"k_star", sc.k_star}, {"k_max", sc.k_max},
                   {"family", mrgl::to_string(fit.family)}, {"parametric_dims", kinds}};
    j["schedule"] = schedule_to_json(sc, schedule);
    j["loss"] = to_string(loss);
    j["converged"] = fit.converged;
    j["sweeps"] = fit.sweeps;
    json coeffs = json::object();
    for (int g = 0; g < sc.num_groups(); ++g) coeffs[mrgl::to_string(sc.groups[g])] = vector_json(fit.beta[g]);
    j["coefficients"] = coeffs;
    json active = json::array();
    for (const auto& g : fit.active_set) active.push_back(mrgl::to_string(g));
    j["active_set"] = active;
    j["kkt"] = kkt_to_json(fit.kkt);
    j["objective_trace"] = fit.objective_trace;
    return j;
}

StoredFit fit_from_json(const json& j)
{
    try {
        StoredFit s;
        const auto& sj = j.at("scheme");
        std::vector<ComponentKind> kinds;
        for (int d : sj.at("parametric_dims").get<std::vector<int>>())
            kinds.push_back(d > 0 ? ComponentKind::parametric(d) : ComponentKind::nonparametric());
        require(static_cast<int>(kinds.size()) == sj.at("p").get<int>(), "scheme p mismatch");
        s.fit.scheme = make_scheme_levels(kinds, sj.at("k_star").get<int>(), sj.at("k_max").get<int>());
        s.fit.family = parse_basis_family(sj.at("family").get<std::string>());
        const auto& sc = s.fit.scheme;
        const auto& sch = j.at("schedule");
        s.schedule.sigma = sch.at("sigma").get<double>();
        s.schedule.eps = sch.at("eps").get<double>();
        s.schedule.A0 = sch.at("A0").get<double>();
        s.schedule.lambda0 = sch.at("lambda0").get<double>();
        for (int g = 0; g < sc.num_groups(); ++g) {
            const std::string key = mrgl::to_string(sc.groups[g]);
            s.schedule.lambda.push_back(sch.at("lambda").at(key).get<double>());
            Eigen::VectorXd b = vector_from_json(j.at("coefficients").at(key));
            require(b.size() == sc.dims[g], "coefficient block " + key + " has the wrong size");
            if (b.squaredNorm() > 0.0) s.fit.active_set.push_back(sc.groups[g]);
            s.fit.beta.push_back(std::move(b));
        }
        s.loss = parse_loss(j.at("loss").get<std::string>());
        s.fit.converged = j.at("converged").get<bool>();
        s.fit.sweeps = j.at("sweeps").get<int>();
        s.fit.objective_trace = j.at("objective_trace").get<std::vector<double>>();
        return s;
    } catch (const json::exception& e) {
        throw input_error(std::string("malformed fit JSON: ") + e.what());
    }
}

json read_json(const fs::path& path)
{
    const std::string text = slurp(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw input_error(path.string() + ": line " +
                          std::to_string(line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0)) +
                          ": invalid JSON");
    }
}

void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_vector_csv(const fs::path& path, const std::string& header, const Eigen::VectorXd& v)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    out << header << '\n';
    for (Eigen::Index i = 0; i < v.size(); ++i) out << format_double(v(i)) << '\n';
}

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string file_digest(const fs::path& path)
{
    const std::string data = slurp(path);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

LossVariant parse_loss(const std::string& s)
{
    if (s == "squared") return LossVariant::SquaredHalf;
    if (s == "root") return LossVariant::RootHalf;
    throw input_error("unknown loss '" + s + "' (expected squared or root)");
}

std::string to_string(LossVariant loss)
{
    return loss == LossVariant::SquaredHalf ? "squared" : "root";
}

} // namespace mrgl::app
