#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctrvis/evaluation.hpp"
#include "ctrvis/extractor.hpp"
#include "ctrvis/learning.hpp"
#include "ctrvis/selection.hpp"

namespace ctrvis {

struct CreativeRecord {
    std::string id;
    std::string path;       // resolved against the manifest directory
    int width = 0;
    int height = 0;
    std::int64_t impressions = 0;
    std::int64_t clicks = 0;
    double ctr = 0.0;       // clicks / impressions
    std::string category;
};

struct DatasetSpec {
    std::string manifest;
    int width = 0;                        // 0: any size
    int height = 0;
    std::int64_t min_impressions = 100000;
    std::string category;                 // empty: any category
};

/// Parses the manifest without touching images. Header must contain
/// creative_id,path,impressions,clicks,category; width, height and ctr are
/// optional. Errors carry the 1-based line and column.
std::vector<CreativeRecord> read_manifest(const std::string& path);

struct IngestSkip {
    std::string id;
    std::string reason;
};

/// Filters the manifest conjunctively and decodes each surviving image to
/// fill in its size. Undecodable or animated images are skipped and listed.
std::vector<CreativeRecord> ingest(const DatasetSpec& spec, std::vector<IngestSkip>* skipped = nullptr);

/// FNV-1a (64 bit) of the canonical extraction config, as 16 hex digits.
std::string config_fingerprint(const ExtractorConfig& cfg);
std::string fnv1a_hex(const std::string& text);

struct FeatureRow {
    std::string id;
    double ctr = 0.0;
    FeatureVector features;
    bool ok = true;
    std::string error;       // set when extraction failed; the features are zero
};

struct FeatureMatrix {
    std::string fingerprint;
    std::vector<FeatureRow> rows;

    std::size_t ok_rows() const;
    /// Rows that extracted successfully, as learner input.
    DesignMatrix design() const;
};

/// Extracts every record with up to `workers` threads. Rows keep the record
/// order. Throws AllExtractionsFailed if no row succeeds.
FeatureMatrix extract_all(const std::vector<CreativeRecord>& records, const FeatureExtractor& extractor,
                          unsigned workers = 0);

std::string feature_matrix_csv(const FeatureMatrix& fm);
FeatureMatrix parse_feature_matrix(const std::string& text);
void write_feature_matrix(const FeatureMatrix& fm, const std::string& path);
FeatureMatrix read_feature_matrix(const std::string& path);
/// Concatenates matrices; throws FingerprintMismatch if their configs differ.
FeatureMatrix combine_feature_matrices(const std::vector<FeatureMatrix>& parts);

struct ExperimentConfig {
    EvalConfig eval;
    SelectionConfig selection;
    bool run_selection = true;
    bool scatter_plots = true;
};

struct ExperimentResult {
    EvalReport eval;
    SelectionReport selection;
    std::vector<ModelArtifact> models;  // fit on every row with run 0's tuned values
};

/// Full protocol: evaluation, selection, final models, plots and tables,
/// all written under `out_dir`.
ExperimentResult run_experiment(const FeatureMatrix& fm, const ExperimentConfig& cfg, const std::string& out_dir);

/// Per-feature CTR scatter plots (SVG plus CSV) for every column.
void emit_scatter_plots(const DesignMatrix& dm, const std::string& dir);

}  // namespace ctrvis
