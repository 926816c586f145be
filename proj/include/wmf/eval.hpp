#pragma once

#include "wmf/attacks.hpp"
#include "wmf/detectors.hpp"

#include <functional>
#include <map>

namespace wmf {

struct ExperimentConfig {
    // synthetic LM spec
    std::uint64_t lm_seed = 7;
    std::uint32_t vocab_size = 32000;
    std::uint32_t context_order = 3;
    double entropy_level = 1.8;

    std::size_t n_sequences = 1000;
    std::uint32_t prompt_len = 8;
    std::uint64_t prompt_seed = 11;

    WatermarkKey key;
    GenParams gen;
    KgwParams kgw;
    DetectorConfig detector;

    std::vector<AttackKind> attack_kinds{AttackKind::addition, AttackKind::deletion,
                                         AttackKind::replacement};
    std::vector<double> epsilons{0.1, 0.2};
    std::uint64_t attack_seed = 5;

    std::string out_dir = "out";
    std::size_t threads = 0; // 0 = hardware concurrency

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    std::string config_hash() const; // hex SHA-256 of the canonical JSON
};

struct ConfusionMetrics {
    double tpr = 0.0;
    double fpr = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ConfusionMetrics confusion_metrics(const std::vector<bool>& labels,
                                   const std::vector<bool>& predictions);

// Rank-based AUC = P(wm > plain) + 0.5 * P(tie), exact via sorting.
double roc_auc(const std::vector<double>& scores_watermarked,
               const std::vector<double>& scores_plain);

struct RocPoint {
    double threshold;
    double tpr;
    double fpr;
};

// Threshold at a target FPR on labeled scores (positive scores high). When
// the classes separate perfectly, the midpoint of the gap.
struct Calibration {
    double threshold = 0.0;
    double achieved_fpr = 0.0;
    double achieved_tpr = 0.0;
    bool separated = false;
    std::vector<RocPoint> roc;
};

Calibration calibrate_threshold(const std::vector<double>& positives,
                                const std::vector<double>& negatives,
                                double target_fpr);

struct Datasets {
    std::vector<Sequence> delta_wm;
    std::vector<Sequence> kgw_wm;
    std::vector<Sequence> plain;
    // keyed by (kind, epsilon)
    std::map<std::pair<std::string, double>, std::vector<AttackRecord>> attacked_delta;
    std::map<std::pair<std::string, double>, std::vector<AttackRecord>> attacked_kgw;
};

Datasets build_datasets(const ExperimentConfig& cfg, const LanguageModelSource& lm);

struct MetricsRow {
    std::string dataset;
    std::string method;
    ConfusionMetrics metrics;
    double threshold_used = 0.0;
};

struct AucRow {
    double epsilon;
    std::string kind;
    double auc_kgw = 0.0;
    double auc_mmllr = 0.0;
    double auc_drllr = 0.0;
};

struct HistogramRow {
    std::string dataset;
    std::string method; // "idd" (n_it) or "kgw" (red count)
    std::map<std::size_t, std::size_t> bins;
};

struct ExperimentResult {
    std::vector<MetricsRow> modification_table;
    std::vector<AucRow> auc_table;
    std::vector<HistogramRow> histograms;
    double wm_threshold = 0.0;
    std::string config_hash;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const LanguageModelSource& lm,
                                const Datasets& ds);

void write_reports(const ExperimentResult& result, const ExperimentConfig& cfg);

// Deterministic parallel map: out[i] = fn(i), reduced in index order.
void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

std::vector<std::vector<TokenId>> make_prompts(std::uint64_t seed, std::size_t count,
                                               std::uint32_t len, std::uint32_t vocab_size);

} // namespace wmf
