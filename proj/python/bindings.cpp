#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <vector>

#include "mmfusion/data.hpp"
#include "mmfusion/errors.hpp"
#include "mmfusion/experiment.hpp"
#include "mmfusion/layers.hpp"
#include "mmfusion/metrics.hpp"
#include "mmfusion/models.hpp"

namespace py = pybind11;

namespace {

using mmfusion::Tensor;

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& a) {
    std::vector<std::size_t> shape(static_cast<std::size_t>(a.ndim()));
    for (py::ssize_t i = 0; i < a.ndim(); ++i) {
        shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(a.shape(i));
    }
    Tensor t(shape);
    std::memcpy(t.data(), a.data(), sizeof(double) * t.size());
    return t;
}

py::array_t<double> to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.rank());
    for (std::size_t i = 0; i < t.rank(); ++i) {
        shape[i] = static_cast<py::ssize_t>(t.shape()[i]);
    }
    py::array_t<double> a(shape);
    std::memcpy(a.mutable_data(), t.data(), sizeof(double) * t.size());
    return a;
}

Tensor as_plane(const DoubleArray& a, std::size_t h, std::size_t w, const char* what) {
    Tensor t = to_tensor(a);
    if (t.size() != h * w) {
        throw mmfusion::DimensionError(std::string(what) + " must hold " +
                                       std::to_string(h * w) + " values");
    }
    return t.reshaped({1, h, w});
}

mmfusion::ConfusionMatrix cm_from_array(
    const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
        throw mmfusion::DimensionError("confusion matrix must be square");
    }
    const std::size_t n = static_cast<std::size_t>(a.shape(0));
    mmfusion::ConfusionMatrix cm(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            cm.cell(i, j) = a.at(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j));
        }
    }
    return cm;
}

py::array_t<std::uint64_t> cm_to_array(const mmfusion::ConfusionMatrix& cm) {
    const std::size_t n = cm.n_classes();
    py::array_t<std::uint64_t> a({static_cast<py::ssize_t>(n), static_cast<py::ssize_t>(n)});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            a.mutable_at(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) =
                cm.at(i, j);
        }
    }
    return a;
}

py::dict report_to_dict(const mmfusion::EvalReport& rep) {
    py::dict d;
    d["accuracy"] = rep.accuracy;
    d["precision_weighted"] = rep.precision_weighted;
    d["recall_weighted"] = rep.recall_weighted;
    d["f1_weighted"] = rep.f1_weighted;
    d["confusion"] = cm_to_array(rep.confusion);
    return d;
}

// Thin wrappers keeping the graphs opaque to Python.
struct PyCnnStream {
    mmfusion::CnnStream model;
    PyCnnStream(std::size_t n_classes, std::uint64_t seed)
        : model(mmfusion::build_cnn_stream(n_classes, seed)) {}
    py::array_t<double> predict(const DoubleArray& image) {
        const Tensor t = as_plane(image, 32, 32, "image");
        return to_array(model.graph.forward({{"image", &t}}));
    }
};

struct PyDepthMlp {
    mmfusion::DepthMlp model;
    PyDepthMlp(std::size_t n_classes, std::uint64_t seed)
        : model(mmfusion::build_depth_mlp(n_classes, seed)) {}
    py::array_t<double> predict(const DoubleArray& depth) {
        Tensor t = to_tensor(depth);
        if (t.size() != 1024) {
            throw mmfusion::DimensionError("depth must hold 1024 values");
        }
        t = t.reshaped({1, 1024});
        return to_array(model.graph.forward({{"depth", &t}}));
    }
};

py::dict generate_dataset(std::size_t n_classes, std::size_t views_per_class,
                          std::uint64_t seed, bool complementary,
                          std::size_t shape_classes, std::size_t depth_classes,
                          std::size_t height, std::size_t width) {
    mmfusion::SyntheticConfig cfg;
    cfg.n_classes = n_classes;
    cfg.views_per_class = views_per_class;
    cfg.complementary = complementary;
    cfg.shape_classes = shape_classes;
    cfg.depth_classes = depth_classes;
    cfg.height = height;
    cfg.width = width;
    const std::vector<mmfusion::MultimodalSample> samples =
        mmfusion::generate_multimodal(cfg, seed);
    const py::ssize_t n = static_cast<py::ssize_t>(samples.size());
    py::array_t<double> left({n, py::ssize_t(32), py::ssize_t(32)});
    py::array_t<double> right({n, py::ssize_t(32), py::ssize_t(32)});
    py::array_t<double> rs({n, py::ssize_t(32), py::ssize_t(32)});
    py::array_t<double> depth({n, py::ssize_t(1024)});
    // The shape-container ctor computes C strides; the scalar-count overload
    // of this pybind11 release leaves them zero.
    py::array_t<std::int32_t> labels(std::vector<py::ssize_t>{n});
    for (py::ssize_t i = 0; i < n; ++i) {
        const mmfusion::MultimodalSample& s = samples[static_cast<std::size_t>(i)];
        std::memcpy(left.mutable_data(i, 0, 0), s.cam_left.data(), sizeof(double) * 1024);
        std::memcpy(right.mutable_data(i, 0, 0), s.cam_right.data(),
                    sizeof(double) * 1024);
        std::memcpy(rs.mutable_data(i, 0, 0), s.cam_rs.data(), sizeof(double) * 1024);
        std::memcpy(depth.mutable_data(i, 0), s.depth_vec.data(), sizeof(double) * 1024);
        labels.mutable_at(i) = s.label;
    }
    py::dict d;
    d["cam_left"] = left;
    d["cam_right"] = right;
    d["cam_rs"] = rs;
    d["depth"] = depth;
    d["labels"] = labels;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Multimodal RGB-D object recognition core";
    m.attr("__version__") = "0.1.0";

    // Translators run newest-first, so the base class must be registered
    // before the subclasses or it would shadow them.
    py::register_exception<mmfusion::Error>(m, "MmfusionError", PyExc_RuntimeError);
    py::register_exception<mmfusion::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def(
        "grayscale",
        [](const DoubleArray& a) { return to_array(mmfusion::grayscale(to_tensor(a))); },
        py::arg("rgb"), "BT.601 luminance of an [H,W,3] image with 0..255 values");
    m.def(
        "bilinear_resize",
        [](const DoubleArray& a, std::size_t h, std::size_t w) {
            return to_array(mmfusion::bilinear_resize(to_tensor(a), h, w));
        },
        py::arg("x"), py::arg("out_h"), py::arg("out_w"),
        "Bilinear resampling with half-pixel centers");
    m.def(
        "softmax",
        [](const DoubleArray& a) { return to_array(mmfusion::softmax(to_tensor(a))); },
        py::arg("logits"));
    m.def(
        "decision_fusion",
        [](const std::vector<DoubleArray>& arrays) {
            std::vector<Tensor> probas;
            probas.reserve(arrays.size());
            for (const DoubleArray& a : arrays) probas.push_back(to_tensor(a));
            mmfusion::DecisionFusion r = mmfusion::decision_fusion(probas);
            return py::make_tuple(to_array(r.fused), r.predicted);
        },
        py::arg("probas"), "Sum probability vectors; returns (fused, class index)");
    m.def(
        "confusion_matrix",
        [](const std::vector<int>& actual, const std::vector<int>& predicted,
           std::size_t n_classes) {
            return cm_to_array(mmfusion::confusion(actual, predicted, n_classes));
        },
        py::arg("actual"), py::arg("predicted"), py::arg("n_classes"));
    m.def(
        "accuracy",
        [](const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& a) {
            return mmfusion::accuracy(cm_from_array(a));
        },
        py::arg("confusion"));
    m.def(
        "weighted_prf",
        [](const py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>& a) {
            const mmfusion::WeightedPRF r = mmfusion::weighted_prf(cm_from_array(a));
            return py::make_tuple(r.precision, r.recall, r.f1);
        },
        py::arg("confusion"));
    m.def(
        "evaluate_labels",
        [](const std::vector<int>& actual, const std::vector<int>& predicted,
           std::size_t n_classes) {
            return report_to_dict(mmfusion::evaluate(actual, predicted, n_classes));
        },
        py::arg("actual"), py::arg("predicted"), py::arg("n_classes"));
    m.def("generate_dataset", &generate_dataset, py::arg("n_classes"),
          py::arg("views_per_class"), py::arg("seed"), py::arg("complementary") = false,
          py::arg("shape_classes") = 0, py::arg("depth_classes") = 0,
          py::arg("height") = 64, py::arg("width") = 64,
          "Synthetic multimodal dataset as stacked numpy arrays");
    m.def("default_config_json",
          []() { return mmfusion::config_to_json(mmfusion::default_config()); });
    m.def(
        "run_experiment_json",
        [](const std::string& text) {
            const std::vector<mmfusion::MetricsRow> rows =
                mmfusion::run_experiment(mmfusion::parse_config_json(text));
            py::list out;
            for (const mmfusion::MetricsRow& r : rows) {
                py::dict d;
                d["model"] = r.model;
                d["accuracy"] = r.accuracy;
                d["precision_weighted"] = r.precision_weighted;
                d["recall_weighted"] = r.recall_weighted;
                d["f1_weighted"] = r.f1_weighted;
                d["epochs_ran"] = r.epochs_ran;
                out.append(d);
            }
            return out;
        },
        py::arg("config_json"),
        "Run a full experiment from a JSON config string; returns the metrics rows");

    py::class_<PyCnnStream>(m, "CnnStream")
        .def(py::init<std::size_t, std::uint64_t>(), py::arg("n_classes"), py::arg("seed"))
        .def("predict", &PyCnnStream::predict, py::arg("image"),
             "Probability vector for a 32x32 grayscale image");
    py::class_<PyDepthMlp>(m, "DepthMlp")
        .def(py::init<std::size_t, std::uint64_t>(), py::arg("n_classes"), py::arg("seed"))
        .def("predict", &PyDepthMlp::predict, py::arg("depth"),
             "Probability vector for a 1024-long depth vector");
}
