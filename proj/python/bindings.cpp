#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "topohead/attention_features.hpp"
#include "topohead/bundle.hpp"
#include "topohead/classifier.hpp"
#include "topohead/cli.hpp"
#include "topohead/embedding_features.hpp"
#include "topohead/error.hpp"
#include "topohead/introspection.hpp"
#include "topohead/metrics.hpp"
#include "topohead/tensor_io.hpp"
#include "topohead/topology.hpp"

namespace py = pybind11;
using namespace topohead;

namespace {

using F32 = py::array_t<float, py::array::c_style | py::array::forcecast>;
using F64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

io::Tensor tensor_from(const F32& a) {
  io::Tensor t;
  for (py::ssize_t k = 0; k < a.ndim(); ++k) t.shape.push_back(static_cast<std::uint32_t>(a.shape(k)));
  t.data.assign(a.data(), a.data() + a.size());
  return t;
}

py::array_t<float> array_from(const io::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
  py::array_t<float> out(shape);
  std::copy(t.data.begin(), t.data.end(), out.mutable_data());
  return out;
}

topo::DistanceMatrix distance_from(const F64& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
    throw Error(ErrorCode::BadShape, "distance matrix must be square");
  }
  const auto n = static_cast<std::size_t>(a.shape(0));
  return topo::DistanceMatrix::from_values(n, std::vector<double>(a.data(), a.data() + a.size()));
}

attn::AttentionMap map_from(const F32& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
    throw Error(ErrorCode::BadShape, "attention map must be square");
  }
  return attn::AttentionMap(std::span<const float>(a.data(), static_cast<std::size_t>(a.size())),
                            static_cast<std::size_t>(a.shape(0)));
}

clf::Matrix matrix_from(const F64& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::BadShape, "expected a 2-D array");
  return clf::Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                     std::vector<double>(a.data(), a.data() + a.size()));
}

py::array_t<double> array_from(const clf::Matrix& m) {
  py::array_t<double> out({static_cast<py::ssize_t>(m.rows), static_cast<py::ssize_t>(m.cols)});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

py::array_t<double> vector_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<intro::HeadValues> head_rows(const F64& a) {
  if (a.ndim() != 2 || a.shape(1) != static_cast<py::ssize_t>(attn::kHeadCount)) {
    throw Error(ErrorCode::BadShape, "expected an [samples, 144] array");
  }
  std::vector<intro::HeadValues> rows(static_cast<std::size_t>(a.shape(0)));
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy_n(a.data() + r * attn::kHeadCount, attn::kHeadCount, rows[r].begin());
  return rows;
}

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Topological features of transformer attention maps and embeddings";

  static py::exception<Error> error(m, "TopoheadError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  m.def("read_tensor", [](const std::filesystem::path& p) { return array_from(io::read_tensor(p)); },
        py::arg("path"), "Load a .tten file as a float32 array.");
  m.def("write_tensor",
        [](const std::filesystem::path& p, const F32& a) { io::write_tensor(p, tensor_from(a)); },
        py::arg("path"), py::arg("array"));

  m.def(
      "mst",
      [](const F64& d) {
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const auto& e : topo::mst(distance_from(d))) out.emplace_back(e.u, e.v, e.weight);
        return out;
      },
      py::arg("distances"), "MST edges (u, v, weight) in (weight, u, v) order.");
  m.def("h0_barcode", [](const F64& d) { return vector_array(topo::h0_barcode(distance_from(d)).bars); },
        py::arg("distances"));
  m.def("h0_mean", [](const F64& d) { return topo::h0_mean(topo::h0_barcode(distance_from(d))); },
        py::arg("distances"));
  m.def("rtd0", [](const F64& a, const F64& b) { return topo::rtd0(distance_from(a), distance_from(b)); },
        py::arg("a"), py::arg("b"));

  m.def(
      "sym_adjacency",
      [](const F32& a) {
        const auto d = attn::sym_adjacency(map_from(a));
        py::array_t<double> out({static_cast<py::ssize_t>(d.size()), static_cast<py::ssize_t>(d.size())});
        std::copy(d.values().begin(), d.values().end(), out.mutable_data());
        return out;
      },
      py::arg("attention"));
  m.def("asymmetry_sum", [](const F32& a) { return attn::asymmetry_sum(map_from(a)); });
  m.def("diagonal_means", [](const F32& a) {
    const auto d = attn::diagonal_means(map_from(a));
    return py::make_tuple(d.main, d.upper, d.lower);
  });
  m.def("h0m_sym", [](const F32& a) { return attn::h0m_sym(map_from(a)); });
  m.def("h0m_pc", [](const F32& a) { return attn::h0m_pc(map_from(a)); });
  m.def(
      "attention_features",
      [](const F32& a) { return vector_array(attn::attention_feature_block(tensor_from(a)).values); },
      py::arg("attention"), "864 per-head features of a [12, 12, n, n] tensor.");
  m.def("attention_feature_names", &attn::attention_feature_names);

  m.def(
      "embedding_features",
      [](const std::filesystem::path& dir, std::size_t cap) {
        return vector_array(emb::embedding_feature_block(io::load_sample_bundle(dir), cap).values());
      },
      py::arg("tensor_dir"), py::arg("frame_cap") = emb::kDefaultFrameCap,
      "51 embedding features of a sample bundle directory.");
  m.def("embedding_feature_names", &emb::embedding_feature_names);
  m.def(
      "pooled_baseline",
      [](const std::filesystem::path& dir, const std::string& mode) {
        if (mode != "first" && mode != "mean") {
          throw Error(ErrorCode::InvalidArgument, "mode must be 'first' or 'mean'");
        }
        return vector_array(emb::pooled_baseline(
            io::load_sample_bundle(dir), mode == "first" ? emb::Pooling::First : emb::Pooling::Mean));
      },
      py::arg("tensor_dir"), py::arg("mode") = "mean");

  py::class_<clf::LinearModel>(m, "LinearModel")
      .def_readonly("classes", &clf::LinearModel::classes)
      .def_readonly("lambda_", &clf::LinearModel::lambda)
      .def_readonly("converged", &clf::LinearModel::converged)
      .def_readonly("n_iter", &clf::LinearModel::n_iter)
      .def_property_readonly("weights", [](const clf::LinearModel& lm) { return array_from(lm.weights); })
      .def_property_readonly("bias", [](const clf::LinearModel& lm) { return vector_array(lm.bias); })
      .def("zero_weight_count", &clf::LinearModel::zero_weight_count)
      .def("predict", [](const clf::LinearModel& lm, const F64& x) { return clf::predict(lm, matrix_from(x)); })
      .def("predict_proba",
           [](const clf::LinearModel& lm, const F64& x) { return array_from(clf::predict_proba(lm, matrix_from(x))); })
      .def("to_json", [](const clf::LinearModel& lm) { return to_python(clf::to_json(lm)); });

  m.def(
      "train_l1_logreg",
      [](const F64& x, const std::vector<std::string>& labels, double lambda, bool standardize,
         std::size_t max_iter, double tol) {
        auto raw = matrix_from(x);
        clf::Standardizer s;
        if (standardize) s = clf::fit_standardizer(raw);
        clf::TrainOptions opts{.lambda = lambda, .seed = 0, .max_iter = max_iter, .tol = tol};
        auto model = clf::train_l1_logreg(standardize ? s.apply(raw) : raw, labels, opts);
        model.standardizer = std::move(s);
        return model;
      },
      py::arg("x"), py::arg("labels"), py::arg("lam") = 1e-2, py::arg("standardize") = true,
      py::arg("max_iter") = 5000, py::arg("tol") = 1e-10);

  m.def("accuracy", [](const std::vector<std::string>& t, const std::vector<std::string>& p) {
    return clf::accuracy(t, p);
  });
  m.def("eer", [](const std::vector<double>& s, const std::vector<int>& l) { return clf::eer(s, l); },
        py::arg("scores"), py::arg("labels"), "Equal error rate in percent; label 1 is positive.");

  m.def("separation_quality", [](const std::vector<double>& a, const std::vector<double>& b) {
    return intro::separation_quality(a, b);
  });
  m.def("pearson", [](const std::vector<double>& x, const std::vector<double>& y) {
    return intro::pearson(x, y);
  });
  m.def(
      "rank_heads",
      [](const F64& a, const F64& b, const std::string& feature) {
        py::list out;
        for (const auto& r : intro::rank_heads(head_rows(a), head_rows(b), feature))
          out.append(to_python(intro::to_json(r)));
        return out;
      },
      py::arg("group_a"), py::arg("group_b"), py::arg("feature_name") = "h0m_sym",
      "Rank heads from [samples, 144] feature arrays of two groups.");
  m.def(
      "colored_barcode",
      [](const F32& a, const std::vector<std::string>& labels, const std::vector<double>& thresholds) {
        return to_python(intro::to_json(intro::colored_barcode(map_from(a), labels, thresholds)));
      },
      py::arg("attention"), py::arg("labels"), py::arg("thresholds") = std::vector<double>{});

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run(args);
      },
      py::arg("args"), "Run the command-line interface; returns its exit code.");
}
