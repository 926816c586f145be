#include "wmf/attacks.hpp"
#include "wmf/detectors.hpp"
#include "wmf/eval.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace wmf;

PYBIND11_MODULE(_wmforensics, m) {
    m.doc() = "delta-reweight watermark embedding, dual detection, and attacks";

    py::register_exception<DomainError>(m, "DomainError");
    py::register_exception<BridgeError>(m, "BridgeError");

    py::class_<ProbDist>(m, "ProbDist")
        .def(py::init([](std::vector<double> probs) {
            ProbDist d{std::move(probs)};
            d.validate();
            return d;
        }))
        .def_readonly("probs", &ProbDist::probs)
        .def("entropy", &ProbDist::entropy);

    py::class_<SyntheticLM>(m, "SyntheticLM")
        .def(py::init<std::uint64_t, std::uint32_t, std::uint32_t, double>(),
             py::arg("seed"), py::arg("vocab_size"), py::arg("context_order") = 3,
             py::arg("entropy_level") = 0.7)
        .def_property_readonly("vocab_size", &SyntheticLM::vocab_size)
        .def_property_readonly("mean_entropy", &SyntheticLM::mean_entropy)
        .def("dist_next", [](const SyntheticLM& lm, const std::vector<TokenId>& ctx) {
            return lm.dist_next(ctx);
        });

    m.def("filter_top_k", &filter_top_k);
    m.def("filter_top_p", &filter_top_p);

    py::class_<WatermarkKey>(m, "WatermarkKey")
        .def_static("from_hex", &WatermarkKey::from_hex)
        .def_static("random", &WatermarkKey::random)
        .def_readonly("bytes", &WatermarkKey::bytes);

    py::class_<Theta>(m, "Theta")
        .def(py::init([](double v) { return Theta{v}; }))
        .def_readonly("value", &Theta::value);

    m.def("theta",
          [](const WatermarkKey& key, const std::vector<TokenId>& window, std::uint32_t n_ct) {
              TextureKey ct{window, n_ct};
              return theta(key, ct).value;
          },
          py::arg("key"), py::arg("window"), py::arg("n_ct") = 5);
    m.def("green_mask",
          [](const WatermarkKey& key, const std::vector<TokenId>& window, std::uint32_t n_ct,
             double gamma, std::uint32_t vocab_size) {
              return green_mask(key, TextureKey{window, n_ct}, gamma, vocab_size);
          },
          py::arg("key"), py::arg("window"), py::arg("n_ct"), py::arg("gamma"),
          py::arg("vocab_size"));
    m.def("sample_delta",
          [](const ProbDist& dist, double th) { return sample_delta(dist, Theta{th}); });

    py::class_<GenParams>(m, "GenParams")
        .def(py::init<>())
        .def_readwrite("n_ct", &GenParams::n_ct)
        .def_readwrite("top_k", &GenParams::top_k)
        .def_readwrite("top_p", &GenParams::top_p)
        .def_readwrite("max_len", &GenParams::max_len)
        .def_readwrite("rng_seed", &GenParams::rng_seed);

    py::class_<Sequence>(m, "Sequence")
        .def_readonly("prompt", &Sequence::prompt)
        .def_readonly("tokens", &Sequence::tokens)
        .def_property_readonly("watermark",
                               [](const Sequence& s) { return watermark_mode_name(s.watermark); })
        .def("to_json", &sequence_to_json)
        .def_static("from_json", &sequence_from_json);

    m.def("generate_watermarked",
          [](const SyntheticLM& lm, const std::vector<TokenId>& prompt, const WatermarkKey& key,
             const GenParams& params) { return generate_watermarked(lm, prompt, key, params); });
    m.def("generate_plain",
          [](const SyntheticLM& lm, const std::vector<TokenId>& prompt, const GenParams& params) {
              return generate_plain(lm, prompt, params);
          });

    py::class_<KgwParams>(m, "KgwParams")
        .def(py::init<>())
        .def_readwrite("gamma", &KgwParams::gamma)
        .def_readwrite("delta_logit", &KgwParams::delta_logit)
        .def_readwrite("n_ct_kgw", &KgwParams::n_ct_kgw)
        .def_readwrite("gen", &KgwParams::gen);

    m.def("generate_kgw",
          [](const SyntheticLM& lm, const std::vector<TokenId>& prompt, const WatermarkKey& key,
             const KgwParams& params) { return generate_kgw(lm, prompt, key, params); });
    m.def("z_score",
          [](const Sequence& seq, const WatermarkKey& key, const KgwParams& params,
             std::uint32_t vocab_size) { return z_score(seq, key, params, vocab_size); });

    py::class_<DetectorConfig>(m, "DetectorConfig")
        .def(py::init<>())
        .def_readwrite("modification_threshold", &DetectorConfig::modification_threshold)
        .def_readwrite("wm_threshold", &DetectorConfig::wm_threshold)
        .def_readwrite("grid_size", &DetectorConfig::grid_size)
        .def_readwrite("z_lo", &DetectorConfig::z_lo)
        .def_readwrite("z_hi", &DetectorConfig::z_hi);

    py::class_<DetectionReport>(m, "DetectionReport")
        .def_readonly("n_it", &DetectionReport::n_it)
        .def_readonly("m_flag", &DetectionReport::m_flag)
        .def_readonly("drllr_avg", &DetectionReport::drllr_avg)
        .def_readonly("mmllr", &DetectionReport::mmllr)
        .def_readonly("verdict_watermark", &DetectionReport::verdict_watermark)
        .def_readonly("verdict_modified", &DetectionReport::verdict_modified)
        .def("to_json", &DetectionReport::to_json);

    m.def("detect",
          [](const SyntheticLM& lm, const WatermarkKey& key, const Sequence& seq,
             const DetectorConfig& cfg) { return detect(lm, key, seq, cfg); });

    py::class_<AttackRecord>(m, "AttackRecord")
        .def_readonly("original", &AttackRecord::original)
        .def_readonly("attacked", &AttackRecord::attacked)
        .def_readonly("sites", &AttackRecord::sites);

    m.def("apply_attack",
          [](const Sequence& seq, const std::string& kind, double epsilon, std::uint64_t seed,
             std::uint32_t vocab_size) {
              AttackSpec spec{attack_kind_from_name(kind), epsilon, seed};
              return apply_attack(seq, spec, vocab_size);
          },
          py::arg("seq"), py::arg("kind"), py::arg("epsilon"), py::arg("seed"),
          py::arg("vocab_size"));

    m.def("roc_auc", &roc_auc);
    m.def("confusion_metrics", [](const std::vector<bool>& labels, const std::vector<bool>& pred) {
        ConfusionMetrics cm = confusion_metrics(labels, pred);
        return py::dict(py::arg("tpr") = cm.tpr, py::arg("fpr") = cm.fpr,
                        py::arg("recall") = cm.recall, py::arg("f1") = cm.f1);
    });
}
