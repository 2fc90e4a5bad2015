#include "mda/modelfmt.hpp"

#include "mda/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace mda {

using json = nlohmann::json;

namespace {

json sparse_triples(const Matrix& m) {
    json out = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            if (m(r, c) != 0.0) out.push_back(json::array({r, c, m(r, c)}));
    return out;
}

json dense_rows(const Matrix& m) {
    json out = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        out.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return out;
}

[[noreturn]] void bad(const std::string& what) { throw DataError("model file: " + what); }

Matrix read_triples(const json& j, std::size_t rows, std::size_t cols, const char* name) {
    if (!j.is_array()) bad(std::string(name) + " must be an array of triples");
    Matrix m(rows, cols);
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 3 || !t[0].is_number_unsigned() || !t[1].is_number_unsigned() ||
            !t[2].is_number())
            bad(std::string(name) + ": malformed weight triple");
        const auto r = t[0].get<std::size_t>();
        const auto c = t[1].get<std::size_t>();
        if (r >= rows || c >= cols) bad(std::string(name) + ": weight index out of range");
        m(r, c) = t[2].get<double>();
    }
    return m;
}

Matrix read_dense(const json& j, std::size_t rows, std::size_t cols, const char* name) {
    if (!j.is_array() || j.size() != rows) bad(std::string(name) + ": expected " + std::to_string(rows) + " rows");
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) bad(std::string(name) + ": row length mismatch");
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
    }
    return m;
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) bad(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(std::string("field \"") + key + "\" has the wrong type");
    }
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string format_weight(double w) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", w);
    return buf;
}

json label_dist_json(const LabelDistribution& dist, const std::vector<std::string>& labels) {
    json j;
    j["labels"] = labels;
    j["probs"] = dist.probs;
    j["n_samples_used"] = dist.n_samples_used;
    j["alpha"] = dist.smoothing_alpha;
    return j;
}

LabelDistribution label_dist_from(const json& j, const std::vector<std::string>& expected) {
    const auto labels = field<std::vector<std::string>>(j, "labels");
    const auto probs = field<std::vector<double>>(j, "probs");
    if (labels.size() != probs.size()) throw DataError("label distribution: labels and probs differ in length");
    if (labels.size() != expected.size()) throw DataError("label distribution: label set differs from the model's");
    LabelDistribution dist;
    dist.probs.assign(expected.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::find(expected.begin(), expected.end(), labels[i]);
        if (it == expected.end()) throw DataError("label distribution: unknown label '" + labels[i] + "'");
        dist.probs[static_cast<std::size_t>(it - expected.begin())] = probs[i];
    }
    double total = 0.0;
    for (double p : dist.probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw DataError("label distribution: probability outside [0, 1]");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw DataError("label distribution: probabilities do not sum to 1");
    dist.n_samples_used = j.contains("n_samples_used") ? j["n_samples_used"].get<std::size_t>() : 0;
    dist.smoothing_alpha = j.contains("alpha") ? j["alpha"].get<double>() : 0.0;
    return dist;
}

}  // namespace

std::string model_to_json(const LinearModel& model) {
    model.validate();
    json j;
    j["format_version"] = model.provenance.format_version;
    j["k"] = model.k;
    j["h"] = model.h;
    j["r"] = model.rank();
    j["labels"] = model.labels;
    j["domains"] = model.domains;
    j["vocabulary"] = model.vocab.tokens();
    j["stopword_sha256"] = model.provenance.stopword_hash;
    j["flags"] = {{"dsb", model.adaptation.dsb},
                  {"dsn", model.adaptation.dsn},
                  {"dr", model.dr_bias_table.has_value()},
                  {"gr", model.is_factorized()}};
    if (const auto* d = std::get_if<DenseWeights>(&model.weights)) {
        j["kind"] = "dense";
        j["weights"] = sparse_triples(d->w);
        j["gr_head"] = nullptr;
    } else {
        const auto& f = std::get<FactorizedWeights>(model.weights);
        j["kind"] = "factorized";
        j["w1"] = sparse_triples(f.w1);
        j["w2"] = sparse_triples(f.w2);
        j["gr_head"] = {{"weights", dense_rows(f.head)}, {"bias", f.head_bias}};
    }
    j["bias"] = model.bias;
    j["dr_bias_table"] = model.dr_bias_table ? dense_rows(*model.dr_bias_table) : json(nullptr);
    json stats = json::array();
    for (const auto& s : model.domain_stats) {
        json e;
        e["domain"] = s.domain;
        e["n_instances"] = s.n_instances;
        e["label_dist"] = {{"probs", s.label_dist.probs},
                           {"n_samples_used", s.label_dist.n_samples_used},
                           {"alpha", s.label_dist.smoothing_alpha}};
        e["feature_means"] = s.feature_means;
        stats.push_back(std::move(e));
    }
    j["domain_stats"] = std::move(stats);
    j["provenance"] = {{"config_digest", model.provenance.config_digest},
                       {"lambda", model.provenance.lambda},
                       {"seed", model.provenance.seed}};
    return j.dump() + "\n";
}

LinearModel model_from_json(const std::string& text, std::vector<std::string>* warnings) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        bad(std::string("not valid JSON (") + e.what() + ")");
    }
    if (!j.is_object()) bad("top level must be an object");
    const int version = field<int>(j, "format_version");
    if (version != kFormatVersion) bad("unsupported format_version " + std::to_string(version));

    LinearModel m;
    m.provenance.format_version = version;
    m.k = field<std::size_t>(j, "k");
    m.h = field<std::size_t>(j, "h");
    const auto r = field<std::size_t>(j, "r");
    m.labels = field<std::vector<std::string>>(j, "labels");
    m.domains = field<std::vector<std::string>>(j, "domains");
    try {
        m.vocab = Vocabulary(field<std::vector<std::string>>(j, "vocabulary"));
    } catch (const DataError& e) {
        bad(e.what());
    }
    if (m.vocab.size() != m.h) bad("vocabulary length differs from h");
    if (m.labels.size() != m.k) bad("label count differs from k");
    m.provenance.stopword_hash = field<std::string>(j, "stopword_sha256");

    const json flags = field<json>(j, "flags");
    m.adaptation.dsb = field<bool>(flags, "dsb");
    m.adaptation.dsn = field<bool>(flags, "dsn");
    const bool dr = field<bool>(flags, "dr");
    const bool gr = field<bool>(flags, "gr");
    const auto kind = field<std::string>(j, "kind");
    if (kind != "dense" && kind != "factorized") bad("unknown kind '" + kind + "'");
    if (gr != (kind == "factorized")) bad("flag gr disagrees with kind");

    if (kind == "dense") {
        if (r != 0) bad("dense model must have r = 0");
        m.weights = DenseWeights{read_triples(field<json>(j, "weights"), m.h, m.k, "weights")};
    } else {
        if (r == 0) bad("factorized model needs r >= 1");
        const json head = field<json>(j, "gr_head");
        if (!head.is_object()) bad("factorized model needs gr_head");
        m.weights = FactorizedWeights{read_triples(field<json>(j, "w1"), m.h, r, "w1"),
                                      read_triples(field<json>(j, "w2"), r, m.k, "w2"),
                                      read_dense(field<json>(head, "weights"), r, m.domains.size(), "gr_head"),
                                      field<std::vector<double>>(head, "bias")};
    }
    m.bias = field<std::vector<double>>(j, "bias");
    const json dr_table = field<json>(j, "dr_bias_table");
    if (dr != !dr_table.is_null()) bad("flag dr disagrees with dr_bias_table");
    if (dr) m.dr_bias_table = read_dense(dr_table, m.domains.size(), m.k, "dr_bias_table");

    for (const auto& e : field<json>(j, "domain_stats")) {
        DomainStats s;
        s.domain = field<std::string>(e, "domain");
        s.n_instances = field<std::size_t>(e, "n_instances");
        const json ld = field<json>(e, "label_dist");
        s.label_dist.probs = field<std::vector<double>>(ld, "probs");
        s.label_dist.n_samples_used = field<std::size_t>(ld, "n_samples_used");
        s.label_dist.smoothing_alpha = field<double>(ld, "alpha");
        s.feature_means = field<std::vector<double>>(e, "feature_means");
        m.domain_stats.push_back(std::move(s));
    }
    const json prov = field<json>(j, "provenance");
    m.provenance.config_digest = field<std::string>(prov, "config_digest");
    m.provenance.lambda = field<double>(prov, "lambda");
    m.provenance.seed = field<std::uint64_t>(prov, "seed");

    m.validate();
    if (warnings && m.provenance.stopword_hash != stopword_hash())
        warnings->push_back("tokenizer mismatch: model stopword list hash " + m.provenance.stopword_hash +
                            " differs from local " + stopword_hash());
    return m;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
    write_text_file(path, model_to_json(model));
}

LinearModel load_model(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    return model_from_json(read_text_file(path), warnings);
}

// ---------------------------------------------------------------------------

void write_lexicon_csv(const Lexicon& lexicon, std::ostream& out) {
    out << "class,rank,token,weight\n";
    for (std::size_t c = 0; c < lexicon.entries.size(); ++c)
        for (std::size_t i = 0; i < lexicon.entries[c].size(); ++i) {
            const auto& [token, w] = lexicon.entries[c][i];
            out << csv_escape(lexicon.classes[c]) << ',' << (i + 1) << ',' << csv_escape(token) << ','
                << format_weight(w) << '\n';
        }
}

void write_lexicon_wordlist(const Lexicon& lexicon, std::ostream& out) {
    for (std::size_t c = 0; c < lexicon.classes.size(); ++c) out << (c ? "," : "") << csv_escape(lexicon.classes[c]);
    out << '\n';
    std::size_t rows = 0;
    for (const auto& e : lexicon.entries) rows = std::max(rows, e.size());
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t c = 0; c < lexicon.entries.size(); ++c) {
            if (c) out << ',';
            if (i < lexicon.entries[c].size()) out << csv_escape(lexicon.entries[c][i].first);
        }
        out << '\n';
    }
}

void export_lexicon(const LinearModel& model, std::size_t top_n, const std::filesystem::path& path,
                    bool with_weights) {
    std::ostringstream ss;
    const Lexicon lex = elicit_lexicon(model, top_n);
    with_weights ? write_lexicon_csv(lex, ss) : write_lexicon_wordlist(lex, ss);
    write_text_file(path, ss.str());
}

Lexicon read_lexicon_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "class,rank,token,weight")
        throw DataError("lexicon CSV: expected header \"class,rank,token,weight\"");
    Lexicon lex;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = csv_split(line);
        if (cols.size() != 4) throw DataError("lexicon CSV line " + std::to_string(line_no) + ": expected 4 columns");
        auto it = std::find(lex.classes.begin(), lex.classes.end(), cols[0]);
        if (it == lex.classes.end()) {
            lex.classes.push_back(cols[0]);
            lex.entries.emplace_back();
            it = lex.classes.end() - 1;
        }
        double w = 0.0;
        try {
            w = std::stod(cols[3]);
        } catch (const std::exception&) {
            throw DataError("lexicon CSV line " + std::to_string(line_no) + ": bad weight");
        }
        lex.entries[static_cast<std::size_t>(it - lex.classes.begin())].emplace_back(cols[2], w);
    }
    return lex;
}

WordWeights read_word_list(std::istream& in) {
    WordWeights out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto sep = line.find_first_of(",\t");
        std::string word = line.substr(0, sep);
        double w = 1.0;
        if (sep != std::string::npos) {
            try {
                w = std::stod(line.substr(sep + 1));
            } catch (const std::exception&) {
                throw DataError("word list line " + std::to_string(line_no) + ": bad weight");
            }
        }
        out[word] = w;
    }
    return out;
}

WordWeights load_word_list(const std::filesystem::path& path) {
    std::istringstream in(read_text_file(path));
    return read_word_list(in);
}

// ---------------------------------------------------------------------------

std::string label_distribution_to_json(const LabelDistribution& dist, const std::vector<std::string>& labels) {
    return label_dist_json(dist, labels).dump() + "\n";
}

LabelDistribution label_distribution_from_json(const std::string& text, const std::vector<std::string>& expected) {
    try {
        return label_dist_from(json::parse(text), expected);
    } catch (const json::exception& e) {
        throw DataError(std::string("label distribution: ") + e.what());
    }
}

PredictionContext ContextFile::context() const {
    PredictionContext ctx;
    if (label_dist) ctx.label_dist = label_dist->probs;
    ctx.dsn_means = dsn_means;
    return ctx;
}

std::string context_to_json(const ContextFile& ctx, const LinearModel& model) {
    json j;
    j["format_version"] = kFormatVersion;
    j["label_dist"] = ctx.label_dist ? label_dist_json(*ctx.label_dist, model.labels) : json(nullptr);
    j["dsn_means"] = ctx.dsn_means ? json(*ctx.dsn_means) : json(nullptr);
    return j.dump() + "\n";
}

ContextFile context_from_json(const std::string& text, const LinearModel& model) {
    ContextFile out;
    try {
        const json j = json::parse(text);
        if (field<int>(j, "format_version") != kFormatVersion) throw DataError("context: unsupported format_version");
        if (j.contains("label_dist") && !j["label_dist"].is_null())
            out.label_dist = label_dist_from(j["label_dist"], model.labels);
        if (j.contains("dsn_means") && !j["dsn_means"].is_null()) {
            auto means = j["dsn_means"].get<std::vector<double>>();
            if (means.size() != model.h) throw DataError("context: dsn_means length differs from model h");
            out.dsn_means = std::move(means);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("context: ") + e.what());
    }
    return out;
}

}  // namespace mda
