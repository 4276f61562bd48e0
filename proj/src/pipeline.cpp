#include "ctrvis/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ctrvis/error.hpp"
#include "ctrvis/parallel.hpp"
#include "ctrvis/plot.hpp"
#include "ctrvis/rng.hpp"
#include "json.hpp"

namespace ctrvis {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Field {
    std::string text;
    int column = 0;  // 1-based character column where the field starts
};

[[noreturn]] void parse_error(int line, int column, const std::string& what) {
    throw Error(ErrorCode::ManifestParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

/// Splits one CSV line; double quotes group and "" escapes a quote.
std::vector<Field> split_csv(const std::string& line, int line_no) {
    std::vector<Field> out;
    std::size_t i = 0;
    while (true) {
        Field f;
        f.column = static_cast<int>(i) + 1;
        if (i < line.size() && line[i] == '"') {
            ++i;
            bool closed = false;
            while (i < line.size()) {
                if (line[i] == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        f.text += '"';
                        i += 2;
                        continue;
                    }
                    closed = true;
                    ++i;
                    break;
                }
                f.text += line[i++];
            }
            if (!closed) parse_error(line_no, f.column, "unterminated quote");
            if (i < line.size() && line[i] != ',') parse_error(line_no, static_cast<int>(i) + 1, "text after quote");
        } else {
            while (i < line.size() && line[i] != ',') f.text += line[i++];
        }
        out.push_back(std::move(f));
        if (i >= line.size()) break;
        ++i;  // comma
    }
    return out;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::int64_t parse_count(const Field& f, int line, const char* name) {
    const std::string t = trim(f.text);
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty()) {
        parse_error(line, f.column, std::string("bad ") + name + " '" + f.text + "'");
    }
    if (v < 0) parse_error(line, f.column, std::string(name) + " is negative");
    return v;
}

double parse_real(const Field& f, int line, const char* name) {
    const std::string t = trim(f.text);
    try {
        std::size_t used = 0;
        const double v = std::stod(t, &used);
        if (used != t.size() || !std::isfinite(v)) throw std::invalid_argument(name);
        return v;
    } catch (const std::exception&) {
        parse_error(line, f.column, std::string("bad ") + name + " '" + f.text + "'");
    }
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur)) {
        if (!cur.empty() && cur.back() == '\r') cur.pop_back();
        out.push_back(cur);
    }
    return out;
}

}  // namespace

std::vector<CreativeRecord> read_manifest(const std::string& path) {
    const auto lines = lines_of(read_file(path));
    if (lines.empty()) parse_error(1, 1, "missing header");
    std::string header = lines[0];
    if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
    const auto cols = split_csv(header, 1);
    std::map<std::string, std::size_t> index;
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::string name = trim(cols[c].text);
        if (index.count(name)) parse_error(1, cols[c].column, "duplicate column '" + name + "'");
        index[name] = c;
    }
    for (const char* req : {"creative_id", "path", "impressions", "clicks", "category"}) {
        if (!index.count(req)) parse_error(1, 1, std::string("missing column '") + req + "'");
    }
    auto col = [&](const char* name) -> long {
        const auto it = index.find(name);
        return it == index.end() ? -1 : static_cast<long>(it->second);
    };
    const long c_id = col("creative_id"), c_path = col("path"), c_imp = col("impressions"), c_clk = col("clicks"),
               c_cat = col("category"), c_w = col("width"), c_h = col("height"), c_ctr = col("ctr");
    const fs::path base = fs::path(path).parent_path();

    std::vector<CreativeRecord> out;
    std::set<std::string> seen;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const int line_no = static_cast<int>(ln) + 1;
        if (trim(lines[ln]).empty()) continue;
        const auto f = split_csv(lines[ln], line_no);
        if (f.size() != cols.size()) {
            const int at = f.size() < cols.size() ? static_cast<int>(lines[ln].size()) + 1 : f[cols.size()].column;
            parse_error(line_no, at,
                        "expected " + std::to_string(cols.size()) + " fields, found " + std::to_string(f.size()));
        }
        CreativeRecord r;
        r.id = trim(f[c_id].text);
        if (r.id.empty()) parse_error(line_no, f[c_id].column, "empty creative_id");
        if (!seen.insert(r.id).second) parse_error(line_no, f[c_id].column, "duplicate creative_id '" + r.id + "'");
        const std::string p = trim(f[c_path].text);
        if (p.empty()) parse_error(line_no, f[c_path].column, "empty path");
        r.path = fs::path(p).is_absolute() ? p : (base / p).string();
        r.impressions = parse_count(f[c_imp], line_no, "impressions");
        r.clicks = parse_count(f[c_clk], line_no, "clicks");
        if (r.impressions == 0) parse_error(line_no, f[c_imp].column, "zero impressions");
        if (r.clicks > r.impressions) parse_error(line_no, f[c_clk].column, "clicks exceed impressions");
        r.ctr = static_cast<double>(r.clicks) / static_cast<double>(r.impressions);
        r.category = trim(f[c_cat].text);
        if (c_w >= 0 && !trim(f[c_w].text).empty()) r.width = static_cast<int>(parse_count(f[c_w], line_no, "width"));
        if (c_h >= 0 && !trim(f[c_h].text).empty()) r.height = static_cast<int>(parse_count(f[c_h], line_no, "height"));
        if (c_ctr >= 0 && !trim(f[c_ctr].text).empty()) {
            const double given = parse_real(f[c_ctr], line_no, "ctr");
            if (std::abs(given - r.ctr) > 1e-9) {
                parse_error(line_no, f[c_ctr].column, "ctr disagrees with clicks / impressions");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CreativeRecord> ingest(const DatasetSpec& spec, std::vector<IngestSkip>* skipped) {
    auto records = read_manifest(spec.manifest);
    std::vector<CreativeRecord> out;
    auto skip = [&](const CreativeRecord& r, const std::string& why) {
        spdlog::warn("skipping {}: {}", r.id, why);
        if (skipped) skipped->push_back({r.id, why});
    };
    for (auto& r : records) {
        if (r.impressions < spec.min_impressions) continue;
        if (!spec.category.empty() && r.category != spec.category) continue;
        ImageBuffer img;
        try {
            img = read_image(r.path);
        } catch (const Error& e) {
            skip(r, e.what());
            continue;
        }
        if ((r.width != 0 && r.width != img.width()) || (r.height != 0 && r.height != img.height())) {
            skip(r, "manifest size " + std::to_string(r.width) + "x" + std::to_string(r.height) +
                        " differs from the image");
            continue;
        }
        r.width = img.width();
        r.height = img.height();
        if (spec.width != 0 && r.width != spec.width) continue;
        if (spec.height != 0 && r.height != spec.height) continue;
        out.push_back(std::move(r));
    }
    if (out.empty()) throw Error(ErrorCode::EmptyDataset, "no creative passes the dataset filters");
    return out;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string config_fingerprint(const ExtractorConfig& cfg) { return fnv1a_hex(cfg.canonical()); }

std::size_t FeatureMatrix::ok_rows() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.ok ? 1 : 0;
    return n;
}

DesignMatrix FeatureMatrix::design() const {
    DesignMatrix dm;
    const auto n = static_cast<Eigen::Index>(ok_rows());
    dm.features.resize(n, static_cast<Eigen::Index>(kFeatureCount));
    dm.targets.resize(n);
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        if (!r.ok) continue;
        for (std::size_t k = 0; k < kFeatureCount; ++k) dm.features(i, static_cast<Eigen::Index>(k)) = r.features.values[k];
        dm.targets[i++] = r.ctr;
    }
    for (int k = 1; k <= static_cast<int>(kFeatureCount); ++k) dm.names.push_back(feature_name(k));
    return dm;
}

FeatureMatrix extract_all(const std::vector<CreativeRecord>& records, const FeatureExtractor& extractor,
                          unsigned workers) {
    FeatureMatrix fm;
    fm.fingerprint = config_fingerprint(extractor.config());
    fm.rows.resize(records.size());
    parallel_for(records.size(), workers, [&](std::size_t i) {
        FeatureRow& row = fm.rows[i];
        row.id = records[i].id;
        row.ctr = records[i].ctr;
        try {
            const ImageBuffer img = read_image(records[i].path);
            row.features = extractor.extract(img, records[i].path);
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
            row.features = FeatureVector{};
            row.features.defined.fill(false);
        }
    });
    for (const auto& r : fm.rows) {
        if (!r.ok) spdlog::warn("extraction failed for {}: {}", r.id, r.error);
    }
    if (!records.empty() && fm.ok_rows() == 0) {
        throw Error(ErrorCode::AllExtractionsFailed, "every image failed to extract");
    }
    return fm;
}

std::string feature_matrix_csv(const FeatureMatrix& fm) {
    std::string out = "# ctrvis-features v1 fingerprint=" + fm.fingerprint + "\n";
    out += "creative_id,ctr,status";
    for (int k = 1; k <= static_cast<int>(kFeatureCount); ++k) out += "," + feature_name(k);
    for (int k = 1; k <= static_cast<int>(kFeatureCount); ++k) out += ",defined_" + feature_name(k);
    out += ",error\n";
    char buf[40];
    for (const auto& r : fm.rows) {
        out += csv_escape(r.id);
        std::snprintf(buf, sizeof(buf), ",%.17g", r.ctr);
        out += buf;
        out += r.ok ? ",ok" : ",failed";
        for (double v : r.features.values) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out += buf;
        }
        for (bool d : r.features.defined) out += d ? ",1" : ",0";
        out += "," + csv_escape(r.error) + "\n";
    }
    return out;
}

FeatureMatrix parse_feature_matrix(const std::string& text) {
    const auto lines = lines_of(text);
    const std::string magic = "# ctrvis-features v1 fingerprint=";
    if (lines.size() < 2 || lines[0].rfind(magic, 0) != 0) {
        throw Error(ErrorCode::CorruptPayload, "not a feature matrix file");
    }
    FeatureMatrix fm;
    fm.fingerprint = lines[0].substr(magic.size());
    const std::size_t width = 3 + 2 * kFeatureCount + 1;
    if (split_csv(lines[1], 2).size() != width) throw Error(ErrorCode::CorruptPayload, "feature matrix header");
    for (std::size_t ln = 2; ln < lines.size(); ++ln) {
        if (lines[ln].empty()) continue;
        const int line_no = static_cast<int>(ln) + 1;
        std::vector<Field> f;
        try {
            f = split_csv(lines[ln], line_no);
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptPayload, e.what());
        }
        if (f.size() != width) {
            throw Error(ErrorCode::CorruptPayload, "feature matrix line " + std::to_string(line_no) + " has " +
                                                       std::to_string(f.size()) + " fields");
        }
        FeatureRow r;
        try {
            r.id = f[0].text;
            r.ctr = parse_real(f[1], line_no, "ctr");
            r.ok = f[2].text == "ok";
            for (std::size_t k = 0; k < kFeatureCount; ++k) {
                r.features.values[k] = parse_real(f[3 + k], line_no, "feature");
                r.features.defined[k] = f[3 + kFeatureCount + k].text == "1";
            }
            r.error = f[width - 1].text;
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptPayload, e.what());
        }
        fm.rows.push_back(std::move(r));
    }
    return fm;
}

void write_feature_matrix(const FeatureMatrix& fm, const std::string& path) {
    write_text_file(path, feature_matrix_csv(fm));
}

FeatureMatrix read_feature_matrix(const std::string& path) { return parse_feature_matrix(read_file(path)); }

FeatureMatrix combine_feature_matrices(const std::vector<FeatureMatrix>& parts) {
    if (parts.empty()) throw Error(ErrorCode::EmptyDataset, "no feature matrices to combine");
    FeatureMatrix out;
    out.fingerprint = parts.front().fingerprint;
    for (const auto& p : parts) {
        if (p.fingerprint != out.fingerprint) {
            throw Error(ErrorCode::FingerprintMismatch,
                        "feature matrices come from different configs (" + out.fingerprint + " vs " + p.fingerprint + ")");
        }
        out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    }
    return out;
}

void emit_scatter_plots(const DesignMatrix& dm, const std::string& dir) {
    fs::create_directories(dir);
    const std::vector<double> y(dm.targets.data(), dm.targets.data() + dm.targets.size());
    const auto yr = padded_range(y);
    for (Eigen::Index j = 0; j < dm.features.cols(); ++j) {
        const std::string name = static_cast<std::size_t>(j) < dm.names.size() ? dm.names[static_cast<std::size_t>(j)]
                                                                                : feature_name(static_cast<int>(j) + 1);
        std::vector<double> x(static_cast<std::size_t>(dm.features.rows()));
        for (Eigen::Index i = 0; i < dm.features.rows(); ++i) x[static_cast<std::size_t>(i)] = dm.features(i, j);
        const auto xr = padded_range(x);
        PlotAxes axes{name + " vs CTR", name, "CTR", xr.first, xr.second, yr.first, yr.second};
        const fs::path base = fs::path(dir) / ("scatter_" + name);
        write_text_file(base.string() + ".svg", svg_scatter_plot(axes, {name, x, y}));
        write_text_file(base.string() + ".csv", xy_csv(name, "ctr", x, y));
    }
}

ExperimentResult run_experiment(const FeatureMatrix& fm, const ExperimentConfig& cfg, const std::string& out_dir) {
    const DesignMatrix dm = fm.design();
    if (dm.targets.size() == 0) throw Error(ErrorCode::EmptyDataset, "feature matrix has no usable rows");
    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    ExperimentResult res;

    auto stage = [](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            throw Error(e.code(), std::string(name) + " stage: " + e.what());
        }
    };

    stage("evaluation", [&] {
        res.eval = evaluate(dm, cfg.eval);
        res.eval.fingerprint = fm.fingerprint;
        write_eval_outputs(res.eval, (base / "evaluation").string());
    });

    if (cfg.run_selection) {
        stage("selection", [&] {
            res.selection = select_features(dm, cfg.selection);
            res.selection.fingerprint = fm.fingerprint;
            fs::create_directories(base / "selection");
            write_text_file((base / "selection" / "selection.txt").string(), res.selection.to_table());
            write_text_file((base / "selection" / "features.csv").string(), res.selection.to_csv());
        });
    }

    stage("final models", [&] {
        fs::create_directories(base / "models");
        std::vector<ModelKind> kinds = {ModelKind::Random};
        for (ModelKind k : cfg.eval.models) {
            if (k != ModelKind::Random) kinds.push_back(k);
        }
        TrainConfig tc = cfg.eval.train;
        tc.seed = derive_seed(cfg.eval.plan.master_seed, 0x66696e616cULL);
        for (ModelKind k : kinds) {
            ModelArtifact m = fit_model(k, dm, tc, res.eval.tuned, tc.seed);
            m.fingerprint = fm.fingerprint;
            save_model(m, (base / "models" / (to_string(k) + ".json")).string());
            res.models.push_back(std::move(m));
        }
    });

    if (cfg.scatter_plots) stage("plots", [&] { emit_scatter_plots(dm, (base / "plots").string()); });

    nlohmann::json run;
    run["master_seed"] = cfg.eval.plan.master_seed;
    run["fingerprint"] = fm.fingerprint;
    run["rows"] = fm.rows.size();
    run["usable_rows"] = dm.targets.size();
    run["runs"] = cfg.eval.plan.runs;
    run["train_fraction"] = cfg.eval.plan.train_fraction;
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : res.models) models.push_back(to_string(m.kind));
    run["models"] = models;
    run["selection_seed"] = cfg.selection.seed;
    run["nonconvergence"] = res.eval.any_nonconvergence();
    write_text_file((base / "run.json").string(), run.dump(1) + "\n");
    return res;
}

}  // namespace ctrvis
