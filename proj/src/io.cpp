#include "robustreg/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace robustreg {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void write_dataset_csv(const std::string& path, const LabeledDataset& data) {
    data.validate();
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "y";
    for (Eigen::Index j = 0; j < data.dim(); ++j) out << ",x_" << (j + 1);
    out << ",corrupted\n";
    for (Eigen::Index r = 0; r < data.rows(); ++r) {
        out << format_double(data.y(r));
        for (Eigen::Index j = 0; j < data.dim(); ++j) out << ',' << format_double(data.X(r, j));
        out << ',' << (data.corrupted ? int((*data.corrupted)[static_cast<std::size_t>(r)]) : 0) << '\n';
    }
}

LabeledDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty dataset file: " + path);

    int cols = 1;
    for (char c : line) cols += (c == ',');
    int p = cols - 2;
    if (p < 1) throw ConfigError("dataset csv needs y, features and corrupted columns");

    std::vector<double> ys;
    std::vector<double> xs;
    std::vector<std::uint8_t> mask;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (static_cast<int>(row.size()) != cols) throw ConfigError("ragged dataset row in " + path);
        ys.push_back(row[0]);
        for (int j = 0; j < p; ++j) xs.push_back(row[static_cast<std::size_t>(1 + j)]);
        mask.push_back(row.back() != 0.0 ? 1 : 0);
    }

    LabeledDataset data;
    const auto n = static_cast<Eigen::Index>(ys.size());
    data.y.resize(n);
    data.X.resize(n, p);
    for (Eigen::Index r = 0; r < n; ++r) {
        data.y(r) = ys[static_cast<std::size_t>(r)];
        for (int j = 0; j < p; ++j) data.X(r, j) = xs[static_cast<std::size_t>(r) * p + j];
    }
    data.corrupted = std::move(mask);
    return data;
}

namespace {
constexpr char kMagic[4] = {'R', 'R', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void write_dataset_binary(const std::string& path, const LabeledDataset& data) {
    data.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(kVersion);
    put_u64(static_cast<std::uint64_t>(data.rows()));
    put_u64(static_cast<std::uint64_t>(data.dim()));
    std::uint32_t flags = (data.corrupted ? 1u : 0u) | (data.b_star ? 2u : 0u);
    put_u32(flags);
    out.write(reinterpret_cast<const char*>(data.y.data()),
              static_cast<std::streamsize>(sizeof(double)) * data.y.size());
    for (Eigen::Index r = 0; r < data.rows(); ++r)
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            double v = data.X(r, j);
            out.write(reinterpret_cast<const char*>(&v), sizeof(double));
        }
    if (data.corrupted)
        out.write(reinterpret_cast<const char*>(data.corrupted->data()),
                  static_cast<std::streamsize>(data.corrupted->size()));
    if (data.b_star)
        out.write(reinterpret_cast<const char*>(data.b_star->data()),
                  static_cast<std::streamsize>(sizeof(double)) * data.b_star->size());
}

LabeledDataset read_dataset_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError("bad dataset magic in " + path);
    auto get_u32 = [&] {
        std::uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_u64 = [&] {
        std::uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    std::uint32_t version = get_u32();
    if (version != kVersion) throw ConfigError("unsupported dataset version in " + path);
    auto rows = static_cast<Eigen::Index>(get_u64());
    auto p = static_cast<Eigen::Index>(get_u64());
    std::uint32_t flags = get_u32();

    LabeledDataset data;
    data.y.resize(rows);
    data.X.resize(rows, p);
    in.read(reinterpret_cast<char*>(data.y.data()), static_cast<std::streamsize>(sizeof(double)) * rows);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index j = 0; j < p; ++j) {
            double v;
            in.read(reinterpret_cast<char*>(&v), sizeof(double));
            data.X(r, j) = v;
        }
    if (flags & 1u) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows));
        in.read(reinterpret_cast<char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
        data.corrupted = std::move(mask);
    }
    if (flags & 2u) {
        Vec b(p);
        in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(sizeof(double)) * p);
        data.b_star = b;
    }
    if (!in) throw ConfigError("truncated dataset file: " + path);
    return data;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

KeyValueConfig KeyValueConfig::parse_text(const std::string& text) {
    KeyValueConfig kv;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream os;
            os << "config line " << line_no << ": expected 'key = value'";
            throw ConfigError(os.str());
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("config: empty key");
        kv.values[key] = value;
    }
    return kv;
}

bool KeyValueConfig::has(const std::string& key) const { return values.count(key) > 0; }

std::string KeyValueConfig::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("config: missing key '" + key + "'");
    return it->second;
}

std::string KeyValueConfig::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
    try {
        return std::stod(get(key));
    } catch (const std::invalid_argument&) {
        throw ConfigError("config: key '" + key + "' is not a number");
    }
}

double KeyValueConfig::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int KeyValueConfig::get_int(const std::string& key) const {
    double v = get_double(key);
    return static_cast<int>(std::lround(v));
}

int KeyValueConfig::get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueConfig::get_u64_or(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    return std::stoull(get(key));
}

std::vector<double> KeyValueConfig::get_list_or(const std::string& key,
                                                std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    std::stringstream ss(get(key));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        std::string t = trim(cell);
        if (!t.empty()) out.push_back(std::stod(t));
    }
    if (out.empty()) throw ConfigError("config: key '" + key + "' has an empty list");
    return out;
}

std::uint64_t KeyValueConfig::content_hash() const {
    std::uint64_t h = 0xCBF29CE484222325ull;
    auto eat = [&](const std::string& s) {
        for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ull;
        h = (h ^ 0x1F) * 0x100000001B3ull;
    };
    for (const auto& [k, v] : values) {
        eat(k);
        eat(v);
    }
    return h;
}

ExperimentConfig ExperimentConfig::from_kv(const KeyValueConfig& kv) {
    ExperimentConfig cf;
    cf.config_hash = kv.content_hash();
    cf.seed = kv.get_u64_or("rng.seed", 1);

    int n = kv.get_int("dims.n");
    int p = kv.get_int("dims.p");
    int K = kv.get_int("dims.K");
    double eta = kv.get_double_or("dims.eta", 0.2);
    double eps = kv.get_double_or("dims.eps", 0.0);
    cf.dims = ProblemDims::create(n, p, K, eta, eps);

    std::string profile = kv.get_or("consts.profile", "practical");
    if (profile == "custom") {
        cf.consts = ConstantsProfile::by_name(kv.get_or("consts.base", "practical"));
        cf.consts.name = "custom";
        auto ov = [&](const char* key, double& field) { field = kv.get_double_or(key, field); };
        ov("consts.a", cf.consts.a);
        ov("consts.bar_a", cf.consts.bar_a);
        ov("consts.C_alpha1", cf.consts.C_alpha1);
        ov("consts.C_alpha2", cf.consts.C_alpha2);
        ov("consts.C_alpha3", cf.consts.C_alpha3);
        ov("consts.C_alpha4", cf.consts.C_alpha4);
        ov("consts.C_bar_alpha1", cf.consts.C_bar_alpha1);
        ov("consts.C_bar_alpha2", cf.consts.C_bar_alpha2);
        ov("consts.C_bar_alpha4", cf.consts.C_bar_alpha4);
        ov("consts.bar_c_star", cf.consts.bar_c_star);
        ov("consts.bar_Delta0", cf.consts.bar_Delta0);
        ov("consts.delta_inner_mult", cf.consts.delta_inner_mult);
        ov("consts.c_star_override", cf.consts.c_star_override);
        ov("consts.C_trunc", cf.consts.C_trunc);
    } else {
        cf.consts = ConstantsProfile::by_name(profile);
    }

    // Feature law and covariance.
    cf.dist.sigma_matrix = Mat::Identity(p, p);
    if (kv.has("dist.sigma_diag")) {
        auto d = kv.get_list_or("dist.sigma_diag", {});
        if (static_cast<int>(d.size()) != p) throw ConfigError("dist.sigma_diag length != p");
        cf.dist.sigma_matrix.setZero();
        for (int j = 0; j < p; ++j) cf.dist.sigma_matrix(j, j) = d[static_cast<std::size_t>(j)];
    }
    std::string flaw = kv.get_or("dist.feature_law", "gaussian");
    if (flaw == "gaussian")
        cf.dist.feature_law = FeatureLaw::gaussian;
    else if (flaw == "student_t")
        cf.dist.feature_law = FeatureLaw::student_t;
    else if (flaw == "rademacher_mixture")
        cf.dist.feature_law = FeatureLaw::scaled_rademacher_mixture;
    else
        throw ConfigError("unknown dist.feature_law: " + flaw);
    cf.dist.feature_nu = kv.get_double_or("dist.feature_nu", 5.0);
    cf.dist.rademacher_lambda = kv.get_double_or("dist.rademacher_lambda", 3.0);
    cf.dist.rademacher_q = kv.get_double_or("dist.rademacher_q", 0.1);

    std::string nlaw = kv.get_or("dist.noise_law", "gaussian");
    if (nlaw == "gaussian")
        cf.dist.noise_law = NoiseLaw::gaussian;
    else if (nlaw == "student_t")
        cf.dist.noise_law = NoiseLaw::student_t;
    else if (nlaw == "feature_dependent")
        cf.dist.noise_law = NoiseLaw::feature_dependent;
    else
        throw ConfigError("unknown dist.noise_law: " + nlaw);
    cf.dist.noise_nu = kv.get_double_or("dist.noise_nu", 5.0);
    cf.dist.noise_sigma = kv.get_double_or("dist.noise_sigma", 1.0);
    cf.dist.hyper_L = feature_hypercontractivity(cf.dist);

    cf.spectral = SpectralInputs::from_covariance(cf.dist.sigma_matrix);
    if (kv.has("spectral.mu2_B2") || kv.has("spectral.sigma_op")) {
        cf.spectral = SpectralInputs::create(kv.get_double_or("spectral.mu2_B2", cf.spectral.mu2_B2),
                                             kv.get_double_or("spectral.sigma_op", cf.spectral.sigma_op));
    }

    // Ground truth: explicit list, or a seeded direction of given norm.
    if (kv.has("model.b_star")) {
        auto b = kv.get_list_or("model.b_star", {});
        if (static_cast<int>(b.size()) != p) throw ConfigError("model.b_star length != p");
        cf.b_star.resize(p);
        for (int j = 0; j < p; ++j) cf.b_star(j) = b[static_cast<std::size_t>(j)];
    } else {
        double norm = kv.get_double_or("model.b_star_norm", 1.0);
        Rng r = Rng(cf.seed).split("b_star");
        cf.b_star = sample_unit_sphere(p, 1, r).row(0).transpose() * norm;
    }

    std::string akind = kv.get_or("attack.kind", "cluster_at_point");
    double amag = kv.get_double_or("attack.magnitude", 100.0);
    std::optional<Vec> atarget;
    if (kv.has("attack.target")) {
        auto tv = kv.get_list_or("attack.target", {});
        if (static_cast<int>(tv.size()) != p) throw ConfigError("attack.target length != p");
        Vec t(p);
        for (int j = 0; j < p; ++j) t(j) = tv[static_cast<std::size_t>(j)];
        atarget = t;
    }
    cf.attack = ContaminationStrategy::parse(akind, amag, atarget);

    cf.fit.T1 = kv.get_int_or("fit.T1", 50);
    cf.fit.T2 = kv.get_int_or("fit.T2", 50);
    cf.fit.S1 = kv.get_int_or("fit.S1", 96);
    cf.fit.S2 = kv.get_int_or("fit.S2", 96);
    cf.fit.mw_max_rounds = kv.get_int_or("fit.max_T", 80);
    cf.zeta = kv.get_double_or("fit.zeta", 1.0);
    cf.L = kv.get_double_or("fit.L", 0.0);
    cf.lepski_zeta0 = kv.get_double_or("lepski.zeta0", 16.0);
    cf.lepski_gamma = kv.get_double_or("lepski.gamma", 0.5);
    return cf;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    return from_kv(KeyValueConfig::parse_file(path));
}

void write_fit_report(const std::string& path, const FitResult& fit, std::uint64_t seed,
                      std::uint64_t config_hash) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "# seed=" << seed << " config_hash=" << config_hash << "\n";
    out << "t,theta,accepted,step_norm,err\n";
    for (const auto& it : fit.iterates) {
        out << it.t << ',' << format_double(it.theta) << ',' << (it.accepted ? 1 : 0) << ','
            << format_double(it.step_norm) << ',' << format_double(it.err) << '\n';
    }
}

void write_bhat_csv(const std::string& path, const Vec& b_hat) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    for (Eigen::Index j = 0; j < b_hat.size(); ++j) out << "b_" << (j + 1) << (j + 1 < b_hat.size() ? "," : "\n");
    for (Eigen::Index j = 0; j < b_hat.size(); ++j)
        out << format_double(b_hat(j)) << (j + 1 < b_hat.size() ? "," : "\n");
}

void write_mw_trace(const std::string& path, const MwTrace& trace) {
    if (trace.weight_history.rows() != trace.rounds)
        throw ConfigError("mw trace dump needs a run recorded with history");
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "t,margin_proxy,weight_entropy\n";
    for (long t = 0; t < trace.rounds; ++t) {
        double inner = trace.weight_history.row(t).dot(trace.loss_history.row(t));
        double entropy = 0.0;
        for (Eigen::Index i = 0; i < trace.weight_history.cols(); ++i) {
            double w = trace.weight_history(t, i);
            if (w > 0.0) entropy -= w * std::log(w);
        }
        out << (t + 1) << ',' << format_double(std::sqrt(std::max(0.0, inner))) << ','
            << format_double(entropy) << '\n';
    }
}

void write_lepski_report(const std::string& path, const AdaptiveResult& res, std::uint64_t seed,
                         std::uint64_t config_hash) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open for writing: " + path);
    out << "# seed=" << seed << " config_hash=" << config_hash << " chosen_level=" << res.chosen_level
        << "\n";
    out << "level,zeta,radius,prefix_feasible,err\n";
    for (const auto& lv : res.levels) {
        out << lv.level << ',' << format_double(lv.zeta) << ',' << format_double(lv.radius) << ','
            << (lv.prefix_feasible ? 1 : 0) << ',' << format_double(lv.err) << '\n';
    }
}

}  // namespace robustreg
