#ifndef SEMADV_CAMPAIGN_HPP
#define SEMADV_CAMPAIGN_HPP

// Campaign runner: attack pools, metric aggregation, reports and run
// manifests. Every aggregate in a report is recomputable from its per-image
// records, and a campaign re-run from its manifest reproduces the adversarial
// images bit for bit.

#include <optional>
#include <string>
#include <vector>

#include "semadv/attack_result.hpp"
#include "semadv/checkpoint.hpp"
#include "semadv/classifier.hpp"
#include "semadv/config.hpp"
#include "semadv/dataset.hpp"
#include "semadv/denoiser.hpp"
#include "semadv/metrics.hpp"
#include "semadv/schedule.hpp"

namespace semadv {

extern const char* kToolVersion;

struct PerImageRecord {
    int image_id = -1;
    int pair_target_id = -1;  // masking attack only
    bool success = false;
    int original_label = -1;
    int adversarial_label = -1;
    int iterations = 0;
    int judge_queries = 0;
    int target_queries = 0;
    double wall_time_s = 0.0;
    double final_delta = 0.0;
    std::vector<double> loss_trace;
    std::vector<double> delta_trace;
    std::string image_file;
};

struct MetricsReport {
    std::string setting;
    double asr = 0.0;
    double fid_local = 0.0;
    double kid_local = 0.0;
    double clean_fid_floor = 0.0;
    double clean_kid_floor = 0.0;
    double avg_queries = 0.0;  // judge queries, the reported query column
    double avg_target_queries = 0.0;
    double avg_iterations = 0.0;
    double avg_time_s = 0.0;
    double avg_final_delta = 0.0;  // masking attack only
    std::vector<PerImageRecord> records;
    std::string config_json;
};

// --- dataset and model storage -------------------------------------------

// Writes dataset.json plus per-image PPM previews. Images regenerate from the
// recorded seed on load; the fingerprint guards against drift.
void write_dataset_dir(const ToyDataset& ds, const std::string& dir);
ToyDataset load_dataset_dir(const std::string& dir);

void save_classifier(const Classifier& model, const std::string& path, const CheckpointMeta& meta);
Classifier load_classifier(const std::string& path);
void save_denoiser(const Denoiser& model, const std::string& path, const CheckpointMeta& meta);
Denoiser load_denoiser(const std::string& path);

// --- pools ----------------------------------------------------------------

// Test-split images the target classifies correctly, in index order.
std::vector<int> select_attack_pool(const ToyDataset& ds, const DatasetSplit& split, Classifier& target, int count);

// Seeded source/target pairs with different labels, both classified correctly.
std::vector<std::pair<int, int>> select_lm_pairs(const ToyDataset& ds, const DatasetSplit& split, Classifier& target,
                                                 int count, uint64_t seed);

// --- campaign -------------------------------------------------------------

MetricsReport run_campaign(const CampaignConfig& cfg, const std::string& out_dir);

// Re-executes the campaign recorded in a manifest, verifying the dataset and
// checkpoint fingerprints first.
MetricsReport rerun_from_manifest(const std::string& manifest_path, const std::string& out_dir);

void write_report_json(const MetricsReport& report, const std::string& path);
MetricsReport read_report_json(const std::string& path);

// Plain-text table mirroring the campaign report columns.
std::string render_summary_table(const std::vector<MetricsReport>& reports);

// Per-pixel absolute difference, max-normalized over all channels.
Tensor difference_image(const Tensor& original, const Tensor& adversarial);

// T=1000 with the conventional linear 1e-4 -> 0.02 beta ramp, deterministic mode.
NoiseSchedule default_schedule();

}  // namespace semadv

#endif  // SEMADV_CAMPAIGN_HPP
