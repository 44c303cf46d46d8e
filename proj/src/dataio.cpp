#include "plrt/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "plrt/error.hpp"

namespace plrt {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
    out.write(content.data(), std::streamsize(content.size()));
    if (!out) throw Error(Errc::IoError, "write to '" + path + "' failed");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_number(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    std::size_t rows = 0;

    std::optional<std::size_t> find(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return std::size_t(it - header.begin());
    }
    std::size_t require(const std::string& name) const {
        const auto i = find(name);
        if (!i) throw Error(Errc::MissingColumn, "column '" + name + "' not found in header");
        return *i;
    }
};

Table parse_table(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t nl = text.find('\n', start);
        lines.push_back(text.substr(start, nl == text.npos ? text.npos : nl - start));
        if (nl == text.npos) break;
        start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw Error(Errc::EmptyFile, "no header row");
    if (lines.size() == 1) throw Error(Errc::EmptyFile, "header row but no data rows");

    Table t;
    std::string_view head = lines.front();
    if (head.substr(0, 3) == "\xEF\xBB\xBF") head.remove_prefix(3);
    for (auto f : split_fields(head)) {
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
        t.header.emplace_back(f);
    }
    t.columns.assign(t.header.size(), {});
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_fields(lines[li]);
        if (fields.size() != t.header.size())
            throw Error(Errc::ParseError, "line " + std::to_string(li + 1) + ": expected " +
                                              std::to_string(t.header.size()) + " fields, found " +
                                              std::to_string(fields.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v;
            if (!parse_number(fields[c], v))
                throw Error(Errc::ParseError, "line " + std::to_string(li + 1) + ", column '" +
                                                  t.header[c] + "': '" + std::string(fields[c]) +
                                                  "' is not a finite number");
            t.columns[c].push_back(v);
        }
        ++t.rows;
    }
    return t;
}

Matrix columns_matrix(const Table& t, const std::vector<std::string>& names) {
    Matrix m(t.rows, names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        const auto& col = t.columns[t.require(names[j])];
        for (std::size_t i = 0; i < t.rows; ++i) m(i, j) = col[i];
    }
    return m;
}

Dataset assemble(const Table& t, const ModelSchema& schema, bool require_target) {
    Dataset ds;
    ds.schema = schema;
    ds.X = columns_matrix(t, schema.regression);
    ds.psi = columns_matrix(t, schema.split);
    if (const auto ti = t.find(schema.target)) {
        ds.y = t.columns[*ti];
    } else if (require_target) {
        t.require(schema.target);
    } else {
        ds.y.assign(t.rows, 0.0);
    }
    return ds;
}

ModelSchema resolve(const Table& t, const SchemaConfig& cfg) {
    if (cfg.target.empty()) throw Error(Errc::InvalidConfig, "target column name is empty");
    t.require(cfg.target);
    ModelSchema s;
    s.target = cfg.target;
    s.regression = cfg.regression;
    if (s.regression.empty())
        for (const auto& h : t.header)
            if (h != cfg.target) s.regression.push_back(h);
    s.split = cfg.split.empty() ? s.regression : cfg.split;
    if (s.regression.empty()) throw Error(Errc::InvalidConfig, "no regression columns");
    for (const auto* list : {&s.regression, &s.split})
        if (std::find(list->begin(), list->end(), cfg.target) != list->end())
            throw Error(Errc::InvalidConfig, "target '" + cfg.target + "' is also listed as a feature");
    return s;
}

} // namespace

Dataset parse_csv(std::string_view text, const SchemaConfig& schema) {
    const Table t = parse_table(text);
    Dataset ds = assemble(t, resolve(t, schema), true);
    if (schema.standardize) {
        ds.schema.x_standardization = Standardization::fit(ds.X);
        ds.schema.psi_standardization = Standardization::fit(ds.psi);
        ds.schema.x_standardization->apply(ds.X);
        ds.schema.psi_standardization->apply(ds.psi);
    }
    return ds;
}

Dataset load_csv(const std::string& path, const SchemaConfig& schema) {
    return parse_csv(read_file(path), schema);
}

Dataset parse_csv_with_schema(std::string_view text, const ModelSchema& schema, bool require_target) {
    const Table t = parse_table(text);
    Dataset ds = assemble(t, schema, require_target);
    if (schema.x_standardization) schema.x_standardization->apply(ds.X);
    if (schema.psi_standardization) schema.psi_standardization->apply(ds.psi);
    return ds;
}

Dataset load_csv_with_schema(const std::string& path, const ModelSchema& schema, bool require_target) {
    return parse_csv_with_schema(read_file(path), schema, require_target);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_csv(const Dataset& data) {
    std::vector<std::string> xn = data.schema.regression;
    if (xn.size() != data.d()) {
        xn.clear();
        for (std::size_t j = 0; j < data.d(); ++j) xn.push_back("x" + std::to_string(j));
    }
    std::vector<std::string> pn = data.schema.split;
    if (pn.size() != data.D()) {
        pn.clear();
        for (std::size_t j = 0; j < data.D(); ++j) pn.push_back("psi" + std::to_string(j));
    }
    const std::string target = data.schema.target.empty() ? "y" : data.schema.target;

    // Split columns already present as regression columns are not repeated.
    std::vector<std::size_t> extra;
    for (std::size_t j = 0; j < pn.size(); ++j)
        if (std::find(xn.begin(), xn.end(), pn[j]) == xn.end()) extra.push_back(j);

    std::string out;
    for (const auto& h : xn) out += h + ",";
    for (std::size_t j : extra) out += pn[j] + ",";
    out += target + "\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t j = 0; j < data.d(); ++j) out += format_double(data.X(i, j)) + ",";
        for (std::size_t j : extra) out += format_double(data.psi(i, j)) + ",";
        out += format_double(data.y[i]) + "\n";
    }
    return out;
}

void write_csv(const std::string& path, const Dataset& data) { write_file(path, format_csv(data)); }

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw Error(Errc::InvalidArgument, "test fraction must lie in (0, 1)");
    const std::size_t n = data.n();
    const double exact = double(n) * (1.0 - test_fraction);
    const double rounded = std::round(exact);
    // Guard against 10 * 0.8 landing a hair above 8.
    const double train_real = std::abs(exact - rounded) <= 1e-9 * std::max(1.0, exact) ? rounded : std::ceil(exact);
    const auto n_train = std::size_t(train_real);
    if (n_train == 0 || n_train >= n)
        throw Error(Errc::DegenerateSplit, "split of " + std::to_string(n) + " rows leaves a side empty");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(perm[i - 1], perm[pick(rng)]);
    }
    std::vector<std::size_t> train(perm.begin(), perm.begin() + std::ptrdiff_t(n_train));
    std::vector<std::size_t> test(perm.begin() + std::ptrdiff_t(n_train), perm.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {subset(data, train), subset(data, test)};
}

double mse(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size())
        throw Error(Errc::LengthMismatch, "predictions and targets differ in length");
    if (predictions.empty()) throw Error(Errc::InvalidArgument, "mse of an empty vector");
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double e = predictions[i] - targets[i];
        s += e * e;
    }
    return s / double(predictions.size());
}

// ---------------------------------------------------------------------------
// Model JSON

namespace {

json standardization_json(const std::optional<Standardization>& s) {
    if (!s) return nullptr;
    return {{"mean", s->mean}, {"scale", s->scale}};
}

std::optional<Standardization> standardization_from(const json& j) {
    if (j.is_null()) return std::nullopt;
    Standardization s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    if (s.mean.size() != s.scale.size()) throw Error(Errc::SchemaViolation, "standardization lengths differ");
    return s;
}

json node_json(const TreeModel& m, std::size_t i) {
    if (const auto* in = std::get_if<InteriorNode>(&m.nodes[i])) {
        json j = {{"type", "interior"}, {"feature", in->feature}, {"threshold", in->threshold}};
        j["ge"] = node_json(m, in->ge);
        j["lt"] = node_json(m, in->lt);
        return j;
    }
    const auto& leaf = std::get<LeafNode>(m.nodes[i]);
    json j = {{"type", "leaf"}};
    if (m.criterion == Criterion::Cart)
        j["value"] = leaf.value;
    else
        j["w"] = leaf.w;
    j["n"] = leaf.n;
    j["loss"] = leaf.loss;
    return j;
}

void node_from(const json& j, Criterion criterion, std::vector<TreeNode>& nodes) {
    const auto type = j.at("type").get<std::string>();
    if (type == "interior") {
        const std::size_t self = nodes.size();
        nodes.emplace_back(InteriorNode{j.at("feature").get<std::size_t>(), j.at("threshold").get<double>(), 0, 0});
        const std::size_t ge = nodes.size();
        node_from(j.at("ge"), criterion, nodes);
        const std::size_t lt = nodes.size();
        node_from(j.at("lt"), criterion, nodes);
        auto& in = std::get<InteriorNode>(nodes[self]);
        in.ge = ge;
        in.lt = lt;
    } else if (type == "leaf") {
        LeafNode leaf;
        if (criterion == Criterion::Cart)
            leaf.value = j.at("value").get<double>();
        else
            leaf.w = j.at("w").get<std::vector<double>>();
        leaf.n = j.at("n").get<std::size_t>();
        leaf.loss = j.at("loss").get<double>();
        nodes.emplace_back(std::move(leaf));
    } else {
        throw Error(Errc::SchemaViolation, "unknown node type '" + type + "'");
    }
}

void check_finite(const TreeModel& m) {
    for (const auto& n : m.nodes) {
        if (const auto* leaf = std::get_if<LeafNode>(&n)) {
            bool ok = std::isfinite(leaf->value) && std::isfinite(leaf->loss);
            for (double v : leaf->w) ok = ok && std::isfinite(v);
            if (!ok) throw Error(Errc::InvalidArgument, "model contains non-finite leaf values");
        }
    }
}

} // namespace

std::string model_to_json(const TreeModel& model) {
    check_finite(model);
    const auto& c = model.config;
    json config = {{"max_depth", c.max_depth},
                   {"min_leaf_size", c.min_leaf_size},
                   {"min_loss_decrease", c.min_loss_decrease},
                   {"gamma", c.gamma},
                   {"leaf_penalty", c.leaf_penalty == LeafPenalty::Lasso ? "lasso" : "ridge"},
                   {"lasso_lambda", c.lasso_lambda},
                   {"select_s", c.root_feature_selection ? json(*c.root_feature_selection) : json(nullptr)}};
    json schema = {{"target", model.schema.target},
                   {"regression", model.schema.regression},
                   {"split", model.schema.split},
                   {"x_standardization", standardization_json(model.schema.x_standardization)},
                   {"psi_standardization", standardization_json(model.schema.psi_standardization)}};
    json j = {{"format_version", 1},
              {"criterion", std::string(criterion_name(model.criterion))},
              {"d", model.d},
              {"D", model.D},
              {"bias", model.bias},
              {"config", config},
              {"schema", schema},
              {"selected_features", model.selected_features},
              {"root", node_json(model, 0)}};
    return j.dump(1) + "\n";
}

TreeModel model_from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaViolation, std::string("model is not valid JSON: ") + e.what());
    }
    TreeModel m;
    try {
        if (!j.is_object()) throw Error(Errc::SchemaViolation, "model document must be an object");
        const auto& version = j.at("format_version");
        if (!version.is_number_integer() || version.get<int>() != 1)
            throw Error(Errc::VersionMismatch, "unsupported format_version " + version.dump());
        m.criterion = j.contains("criterion") ? parse_criterion(j.at("criterion").get<std::string>())
                                              : Criterion::Plrt;
        m.d = j.at("d").get<std::size_t>();
        m.D = j.at("D").get<std::size_t>();
        m.bias = j.at("bias").get<bool>();
        if (j.contains("config")) {
            const auto& c = j.at("config");
            m.config.max_depth = c.value("max_depth", m.config.max_depth);
            m.config.min_leaf_size = c.value("min_leaf_size", m.config.min_leaf_size);
            m.config.min_loss_decrease = c.value("min_loss_decrease", m.config.min_loss_decrease);
            m.config.gamma = c.value("gamma", m.config.gamma);
            m.config.leaf_penalty =
                c.value("leaf_penalty", std::string("ridge")) == "lasso" ? LeafPenalty::Lasso : LeafPenalty::Ridge;
            m.config.lasso_lambda = c.value("lasso_lambda", 0.0);
            if (c.contains("select_s") && !c.at("select_s").is_null())
                m.config.root_feature_selection = c.at("select_s").get<std::size_t>();
        }
        m.config.bias = m.bias;
        if (j.contains("schema")) {
            const auto& s = j.at("schema");
            m.schema.target = s.value("target", std::string());
            m.schema.regression = s.value("regression", std::vector<std::string>{});
            m.schema.split = s.value("split", std::vector<std::string>{});
            if (s.contains("x_standardization"))
                m.schema.x_standardization = standardization_from(s.at("x_standardization"));
            if (s.contains("psi_standardization"))
                m.schema.psi_standardization = standardization_from(s.at("psi_standardization"));
        }
        if (j.contains("selected_features"))
            m.selected_features = j.at("selected_features").get<std::vector<std::size_t>>();
        node_from(j.at("root"), m.criterion, m.nodes);
    } catch (const json::exception& e) {
        throw Error(Errc::SchemaViolation, std::string("malformed model: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::VersionMismatch || e.code() == Errc::SchemaViolation) throw;
        throw Error(Errc::SchemaViolation, e.what());
    }
    m.validate();
    return m;
}

void save_model(const TreeModel& model, const std::string& path) { write_file(path, model_to_json(model)); }

TreeModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

} // namespace plrt
