#include "wmf/eval.hpp"
#include "wmf/rng.hpp"

#include <nlohmann/json.hpp>
#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace wmf {

using nlohmann::json;

namespace {

std::string key_to_hex(const WatermarkKey& key) {
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (std::uint8_t b : key.bytes) {
        os << std::setw(2) << static_cast<int>(b);
    }
    return os.str();
}

} // namespace

std::string ExperimentConfig::to_json() const {
    json j{{"lm_seed", lm_seed},
           {"vocab_size", vocab_size},
           {"context_order", context_order},
           {"entropy_level", entropy_level},
           {"n_sequences", n_sequences},
           {"prompt_len", prompt_len},
           {"prompt_seed", prompt_seed},
           {"key", key_to_hex(key)},
           {"gen",
            {{"n_ct", gen.n_ct},
             {"top_k", gen.top_k},
             {"top_p", gen.top_p},
             {"max_len", gen.max_len},
             {"rng_seed", gen.rng_seed}}},
           {"kgw",
            {{"gamma", kgw.gamma}, {"delta_logit", kgw.delta_logit}, {"n_ct_kgw", kgw.n_ct_kgw}}},
           {"detector",
            {{"mt", detector.modification_threshold},
             {"grid_size", detector.grid_size},
             {"z_lo", detector.z_lo},
             {"z_hi", detector.z_hi}}},
           {"epsilons", epsilons},
           {"attack_seed", attack_seed},
           {"out_dir", out_dir}};
    std::vector<std::string> kinds;
    for (AttackKind k : attack_kinds) {
        kinds.push_back(attack_kind_name(k));
    }
    j["attack_kinds"] = kinds;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig c;
    c.lm_seed = j.value("lm_seed", c.lm_seed);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.context_order = j.value("context_order", c.context_order);
    c.entropy_level = j.value("entropy_level", c.entropy_level);
    c.n_sequences = j.value("n_sequences", c.n_sequences);
    c.prompt_len = j.value("prompt_len", c.prompt_len);
    c.prompt_seed = j.value("prompt_seed", c.prompt_seed);
    if (j.contains("key")) {
        c.key = WatermarkKey::from_hex(j["key"].get<std::string>());
    }
    if (j.contains("gen")) {
        const json& g = j["gen"];
        c.gen.n_ct = g.value("n_ct", c.gen.n_ct);
        c.gen.top_k = g.value("top_k", c.gen.top_k);
        c.gen.top_p = g.value("top_p", c.gen.top_p);
        c.gen.max_len = g.value("max_len", c.gen.max_len);
        c.gen.rng_seed = g.value("rng_seed", c.gen.rng_seed);
    }
    if (j.contains("kgw")) {
        const json& g = j["kgw"];
        c.kgw.gamma = g.value("gamma", c.kgw.gamma);
        c.kgw.delta_logit = g.value("delta_logit", c.kgw.delta_logit);
        c.kgw.n_ct_kgw = g.value("n_ct_kgw", c.kgw.n_ct_kgw);
    }
    if (j.contains("detector")) {
        const json& d = j["detector"];
        c.detector.modification_threshold = d.value("mt", c.detector.modification_threshold);
        c.detector.grid_size = d.value("grid_size", c.detector.grid_size);
        c.detector.z_lo = d.value("z_lo", c.detector.z_lo);
        c.detector.z_hi = d.value("z_hi", c.detector.z_hi);
    }
    if (j.contains("epsilons")) {
        c.epsilons = j["epsilons"].get<std::vector<double>>();
    }
    if (j.contains("attack_kinds")) {
        c.attack_kinds.clear();
        for (const auto& k : j["attack_kinds"]) {
            c.attack_kinds.push_back(attack_kind_from_name(k.get<std::string>()));
        }
    }
    c.attack_seed = j.value("attack_seed", c.attack_seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
}

std::string ExperimentConfig::config_hash() const {
    // out_dir is report plumbing, not part of the experiment identity: the
    // same config written to two directories must hash identically
    json j = json::parse(to_json());
    j.erase("out_dir");
    std::string canonical = j.dump(2);
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(canonical.data()), canonical.size(), digest);
    std::ostringstream os;
    os << std::hex << std::setfill('0');
    for (int i = 0; i < 16; ++i) {
        os << std::setw(2) << static_cast<int>(digest[i]);
    }
    return os.str();
}

ConfusionMetrics confusion_metrics(const std::vector<bool>& labels,
                                   const std::vector<bool>& predictions) {
    if (labels.size() != predictions.size()) {
        throw DomainError("labels and predictions must have equal length");
    }
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i]) {
            predictions[i] ? ++tp : ++fn;
        } else {
            predictions[i] ? ++fp : ++tn;
        }
    }
    if (tp + fn == 0) {
        throw DomainError("no positive labels in metric input");
    }
    if (fp + tn == 0) {
        throw DomainError("no negative labels in metric input");
    }
    ConfusionMetrics m;
    m.tpr = static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.recall = m.tpr;
    m.fpr = static_cast<double>(fp) / static_cast<double>(fp + tn);
    double precision = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.f1 = (precision + m.recall) == 0.0 ? 0.0
                                         : 2.0 * precision * m.recall / (precision + m.recall);
    return m;
}

double roc_auc(const std::vector<double>& scores_watermarked,
               const std::vector<double>& scores_plain) {
    if (scores_watermarked.empty() || scores_plain.empty()) {
        throw DomainError("roc_auc requires non-empty score lists");
    }
    // midrank formulation: AUC = (R_pos - n_pos(n_pos+1)/2) / (n_pos * n_neg)
    std::vector<std::pair<double, int>> all;
    all.reserve(scores_watermarked.size() + scores_plain.size());
    for (double s : scores_watermarked) {
        all.emplace_back(s, 1);
    }
    for (double s : scores_plain) {
        all.emplace_back(s, 0);
    }
    std::sort(all.begin(), all.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) {
            ++j;
        }
        double midrank = 0.5 * static_cast<double>(i + 1 + j); // ranks i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].second == 1) {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    double np = static_cast<double>(scores_watermarked.size());
    double nn = static_cast<double>(scores_plain.size());
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

Calibration calibrate_threshold(const std::vector<double>& positives,
                                const std::vector<double>& negatives,
                                double target_fpr) {
    if (positives.empty() || negatives.empty()) {
        throw DomainError("calibration needs both score classes");
    }
    Calibration cal;
    double min_pos = *std::min_element(positives.begin(), positives.end());
    double max_neg = *std::max_element(negatives.begin(), negatives.end());

    auto rates_at = [&](double thr) {
        double tp = 0, fp = 0;
        for (double s : positives) {
            if (s > thr) {
                ++tp;
            }
        }
        for (double s : negatives) {
            if (s > thr) {
                ++fp;
            }
        }
        return std::pair<double, double>{tp / static_cast<double>(positives.size()),
                                         fp / static_cast<double>(negatives.size())};
    };

    // ROC curve over candidate thresholds (all observed scores)
    std::vector<double> cand = negatives;
    cand.insert(cand.end(), positives.begin(), positives.end());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    for (double t : cand) {
        auto [tpr, fpr] = rates_at(t);
        cal.roc.push_back({t, tpr, fpr});
    }

    if (max_neg < min_pos) {
        cal.separated = true;
        cal.threshold = 0.5 * (max_neg + min_pos);
    } else {
        // smallest threshold achieving FPR <= target
        double best = max_neg;
        for (double t : cand) {
            if (rates_at(t).second <= target_fpr) {
                best = t;
                break;
            }
        }
        cal.threshold = best;
    }
    auto [tpr, fpr] = rates_at(cal.threshold);
    cal.achieved_tpr = tpr;
    cal.achieved_fpr = fpr;
    return cal;
}

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    threads = std::min(threads, n == 0 ? std::size_t{1} : n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) {
                    fn(i);
                }
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) {
                    error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

std::vector<std::vector<TokenId>> make_prompts(std::uint64_t seed, std::size_t count,
                                               std::uint32_t len, std::uint32_t vocab_size) {
    std::vector<std::vector<TokenId>> prompts(count);
    SplitMix64 rng(seed);
    for (auto& p : prompts) {
        p.resize(len);
        for (auto& t : p) {
            t = static_cast<TokenId>(rng.next_below(vocab_size));
        }
    }
    return prompts;
}

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    SplitMix64 rng(a ^ (b * 0x9E3779B97F4A7C15ULL));
    return rng.next();
}

} // namespace

Datasets build_datasets(const ExperimentConfig& cfg, const LanguageModelSource& lm) {
    Datasets ds;
    auto prompts = make_prompts(cfg.prompt_seed, cfg.n_sequences, cfg.prompt_len, cfg.vocab_size);

    ds.delta_wm.resize(cfg.n_sequences);
    ds.kgw_wm.resize(cfg.n_sequences);
    ds.plain.resize(cfg.n_sequences);
    parallel_for(cfg.n_sequences, cfg.threads, [&](std::size_t i) {
        GenParams gp = cfg.gen;
        ds.delta_wm[i] = generate_watermarked(lm, prompts[i], cfg.key, gp);

        gp.rng_seed = mix_seed(cfg.gen.rng_seed, i * 2 + 1);
        ds.plain[i] = generate_plain(lm, prompts[i], gp);

        KgwParams kp = cfg.kgw;
        kp.gen = cfg.gen;
        kp.gen.rng_seed = mix_seed(cfg.gen.rng_seed, i * 2 + 2);
        ds.kgw_wm[i] = generate_kgw(lm, prompts[i], cfg.key, kp);
    });

    for (AttackKind kind : cfg.attack_kinds) {
        for (double eps : cfg.epsilons) {
            auto cell_key = std::make_pair(attack_kind_name(kind), eps);
            auto& cell_delta = ds.attacked_delta[cell_key];
            auto& cell_kgw = ds.attacked_kgw[cell_key];
            cell_delta.resize(cfg.n_sequences);
            cell_kgw.resize(cfg.n_sequences);
            std::uint64_t kind_salt =
                mix_seed(cfg.attack_seed, static_cast<std::uint64_t>(kind) * 1000 +
                                              static_cast<std::uint64_t>(eps * 100));
            parallel_for(cfg.n_sequences, cfg.threads, [&](std::size_t i) {
                AttackSpec spec{kind, eps, mix_seed(kind_salt, i)};
                cell_delta[i] = apply_attack(ds.delta_wm[i], spec, cfg.vocab_size);
                spec.seed = mix_seed(kind_salt, i + cfg.n_sequences);
                cell_kgw[i] = apply_attack(ds.kgw_wm[i], spec, cfg.vocab_size);
            });
        }
    }
    return ds;
}

namespace {

struct DeltaScores {
    std::vector<std::size_t> n_it;
    std::vector<double> drllr;
    std::vector<double> mmllr;
};

DeltaScores score_delta(const std::vector<Sequence>& seqs, const LanguageModelSource& lm,
                        const ExperimentConfig& cfg) {
    DeltaScores s;
    s.n_it.resize(seqs.size());
    s.drllr.resize(seqs.size());
    s.mmllr.resize(seqs.size());
    parallel_for(seqs.size(), cfg.threads, [&](std::size_t i) {
        auto trace = replay_consistency(lm, cfg.key, seqs[i], cfg.detector);
        s.n_it[i] = idd_score(trace);
        s.drllr[i] = drllr(trace);
        s.mmllr[i] = mmllr(trace, cfg.detector.grid_size);
    });
    return s;
}

std::vector<Sequence> attacked_only(const std::vector<AttackRecord>& records) {
    std::vector<Sequence> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.attacked);
    }
    return out;
}

std::vector<double> score_kgw_z(const std::vector<Sequence>& seqs,
                                const LanguageModelSource& lm, const ExperimentConfig& cfg) {
    std::vector<double> z(seqs.size());
    parallel_for(seqs.size(), cfg.threads, [&](std::size_t i) {
        KgwParams kp = cfg.kgw;
        kp.gen = seqs[i].params;
        z[i] = z_score(seqs[i], cfg.key, kp, lm.vocab_size());
    });
    return z;
}

std::map<std::size_t, std::size_t> histogram(const std::vector<std::size_t>& counts) {
    std::map<std::size_t, std::size_t> bins;
    for (std::size_t c : counts) {
        ++bins[c];
    }
    return bins;
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    SyntheticLM lm(cfg.lm_seed, cfg.vocab_size, cfg.context_order, cfg.entropy_level);
    Datasets ds = build_datasets(cfg, lm);
    return run_experiment(cfg, lm, ds);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const LanguageModelSource& lm,
                                const Datasets& ds) {
    ExperimentResult result;
    result.config_hash = cfg.config_hash();

    // delta scores on clean and plain, used for calibration and AUC at eps=0
    DeltaScores clean = score_delta(ds.delta_wm, lm, cfg);
    DeltaScores plain = score_delta(ds.plain, lm, cfg);
    Calibration cal = calibrate_threshold(clean.drllr, plain.drllr, 0.01);
    result.wm_threshold = cal.threshold;

    // KGW z on clean kgw and plain, for the AUC baseline
    std::vector<double> z_clean = score_kgw_z(ds.kgw_wm, lm, cfg);
    std::vector<double> z_plain = score_kgw_z(ds.plain, lm, cfg);

    // AUC rows at eps = 0 (per kind, same values: no attack applied)
    for (AttackKind kind : cfg.attack_kinds) {
        AucRow row;
        row.epsilon = 0.0;
        row.kind = attack_kind_name(kind);
        row.auc_drllr = roc_auc(clean.drllr, plain.drllr);
        row.auc_mmllr = roc_auc(clean.mmllr, plain.mmllr);
        row.auc_kgw = roc_auc(z_clean, z_plain);
        result.auc_table.push_back(row);
    }

    std::vector<bool> modified_labels;
    modified_labels.insert(modified_labels.end(), cfg.n_sequences, true);
    modified_labels.insert(modified_labels.end(), cfg.n_sequences, false);

    for (double eps : cfg.epsilons) {
        for (AttackKind kind : cfg.attack_kinds) {
            auto cell_key = std::make_pair(attack_kind_name(kind), eps);
            auto delta_seqs = attacked_only(ds.attacked_delta.at(cell_key));
            auto kgw_seqs = attacked_only(ds.attacked_kgw.at(cell_key));

            DeltaScores attacked = score_delta(delta_seqs, lm, cfg);
            std::vector<double> z_attacked = score_kgw_z(kgw_seqs, lm, cfg);

            std::string dataset_name =
                attack_kind_name(kind) + "(eps=" + std::to_string(eps).substr(0, 4) + ")";

            // modification detection: positives = attacked, negatives = clean
            std::vector<bool> idd_pred;
            for (std::size_t c : attacked.n_it) {
                idd_pred.push_back(idd_decide(c, cfg.gen.n_ct, cfg.detector.modification_threshold));
            }
            for (std::size_t c : clean.n_it) {
                idd_pred.push_back(idd_decide(c, cfg.gen.n_ct, cfg.detector.modification_threshold));
            }
            result.modification_table.push_back(
                {dataset_name, "idd", confusion_metrics(modified_labels, idd_pred),
                 cfg.detector.modification_threshold});

            std::vector<bool> kgw_pred;
            for (double z : z_attacked) {
                kgw_pred.push_back(kgw_decide(z, cfg.detector.z_lo, cfg.detector.z_hi) ==
                                   KgwVerdict::watermarked_modified);
            }
            for (double z : z_clean) {
                kgw_pred.push_back(kgw_decide(z, cfg.detector.z_lo, cfg.detector.z_hi) ==
                                   KgwVerdict::watermarked_modified);
            }
            result.modification_table.push_back(
                {dataset_name, "kgw_improved", confusion_metrics(modified_labels, kgw_pred),
                 cfg.detector.z_lo});

            // generated-text detection AUC at this grid cell
            AucRow row;
            row.epsilon = eps;
            row.kind = attack_kind_name(kind);
            row.auc_drllr = roc_auc(attacked.drllr, plain.drllr);
            row.auc_mmllr = roc_auc(attacked.mmllr, plain.mmllr);
            row.auc_kgw = roc_auc(z_attacked, z_plain);
            result.auc_table.push_back(row);

            // discarded-token histograms at the first epsilon level
            if (eps == cfg.epsilons.front()) {
                result.histograms.push_back({dataset_name, "idd", histogram(attacked.n_it)});
                std::vector<std::size_t> red(kgw_seqs.size());
                parallel_for(kgw_seqs.size(), cfg.threads, [&](std::size_t i) {
                    KgwParams kp = cfg.kgw;
                    kp.gen = kgw_seqs[i].params;
                    red[i] = kgw_seqs[i].tokens.size() -
                             green_count(kgw_seqs[i], cfg.key, kp, lm.vocab_size());
                });
                result.histograms.push_back({dataset_name, "kgw", histogram(red)});
            }
        }
    }

    // clean histograms
    result.histograms.push_back({"clean", "idd", histogram(clean.n_it)});
    {
        std::vector<std::size_t> red(ds.kgw_wm.size());
        parallel_for(ds.kgw_wm.size(), cfg.threads, [&](std::size_t i) {
            KgwParams kp = cfg.kgw;
            kp.gen = ds.kgw_wm[i].params;
            red[i] = ds.kgw_wm[i].tokens.size() -
                     green_count(ds.kgw_wm[i], cfg.key, kp, lm.vocab_size());
        });
        result.histograms.push_back({"clean", "kgw", histogram(red)});
    }

    return result;
}

void write_reports(const ExperimentResult& result, const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);

    {
        std::ofstream out(cfg.out_dir + "/modification_table.csv");
        out << "dataset,method,tpr,fpr,recall,f1,threshold,config_hash\n";
        for (const auto& row : result.modification_table) {
            out << row.dataset << ',' << row.method << ',' << row.metrics.tpr << ','
                << row.metrics.fpr << ',' << row.metrics.recall << ',' << row.metrics.f1 << ','
                << row.threshold_used << ',' << result.config_hash << '\n';
        }
    }
    {
        std::ofstream out(cfg.out_dir + "/auc_table.csv");
        out << "epsilon,kind,auc_kgw,auc_mmllr,auc_drllr,config_hash\n";
        for (const auto& row : result.auc_table) {
            out << row.epsilon << ',' << row.kind << ',' << row.auc_kgw << ',' << row.auc_mmllr
                << ',' << row.auc_drllr << ',' << result.config_hash << '\n';
        }
    }
    {
        std::ofstream out(cfg.out_dir + "/histograms.csv");
        out << "dataset,method,discarded,count,config_hash\n";
        for (const auto& row : result.histograms) {
            for (const auto& [bin, count] : row.bins) {
                out << row.dataset << ',' << row.method << ',' << bin << ',' << count << ','
                    << result.config_hash << '\n';
            }
        }
    }
    {
        json j{{"config_hash", result.config_hash},
               {"wm_threshold", result.wm_threshold},
               {"config", json::parse(cfg.to_json())}};
        std::ofstream out(cfg.out_dir + "/report.json");
        out << j.dump(2) << '\n';
    }
}

} // namespace wmf
