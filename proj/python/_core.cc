/*
 * Copyright 2026 The thingsyntax Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "cli.h"
#include "thingsyntax/analysis.h"
#include "thingsyntax/errors.h"
#include "thingsyntax/io.h"
#include "thingsyntax/pipeline.h"
#include "thingsyntax/service.h"

namespace py = pybind11;

namespace thingsyntax {
namespace {

std::vector<std::vector<double>> to_rows(const std::vector<ThingWindow>& windows) {
  std::vector<std::vector<double>> rows;
  rows.reserve(windows.size());
  for (const auto& w : windows) {
    const auto f = w.features();
    rows.emplace_back(f.begin(), f.end());
  }
  return rows;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = cli::run_command(args, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

void declare_types(py::module_& m) {
  py::class_<ThingWindow>(m, "ThingWindow")
      .def(py::init<>())
      .def(py::init([](double x, double y, double size, double ratio, int color) {
             return ThingWindow{x, y, size, ratio, color};
           }),
           py::arg("x"), py::arg("y"), py::arg("size"), py::arg("ratio"), py::arg("color"))
      .def_readwrite("x", &ThingWindow::x)
      .def_readwrite("y", &ThingWindow::y)
      .def_readwrite("size", &ThingWindow::size)
      .def_readwrite("ratio", &ThingWindow::ratio)
      .def_readwrite("color", &ThingWindow::color)
      .def("features", [](const ThingWindow& w) {
        const auto f = w.features();
        return std::vector<double>(f.begin(), f.end());
      })
      .def(py::self == py::self)
      .def("__repr__", [](const ThingWindow& w) {
        std::ostringstream s;
        s << "ThingWindow(x=" << w.x << ", y=" << w.y << ", size=" << w.size
          << ", ratio=" << w.ratio << ", color=" << w.color << ")";
        return s.str();
      });

  py::class_<Statement>(m, "Statement")
      .def(py::init([](int h, int v, int size, int ratio, int color) {
             return Statement{h, v, size, ratio, color};
           }),
           py::arg("horizontal"), py::arg("vertical"), py::arg("size"), py::arg("ratio"),
           py::arg("color"))
      .def_readwrite("horizontal", &Statement::horizontal)
      .def_readwrite("vertical", &Statement::vertical)
      .def_readwrite("size", &Statement::size)
      .def_readwrite("ratio", &Statement::ratio)
      .def_readwrite("color", &Statement::color)
      .def(py::self == py::self)
      .def("__repr__", [](const Statement& s) { return "Statement('" + render_statement(s, 3) + "')"; });
  m.attr("ANY_COLOR") = Statement::kAnyColor;

  py::class_<BinBoundaries>(m, "BinBoundaries")
      .def_readonly("bins", &BinBoundaries::bins)
      .def("cuts", [](const BinBoundaries& b, const std::string& property) {
        const auto p = property_from_name(property);
        if (!p || *p == Property::kColor) throw ConfigError("no cuts for '" + property + "'");
        return b.cuts_for(*p);
      })
      .def_static("uniform", &BinBoundaries::uniform);

  py::class_<GmmModel>(m, "GmmModel")
      .def_readonly("components", &GmmModel::components)
      .def_readonly("dimension", &GmmModel::dimension)
      .def_readonly("weights", &GmmModel::weights)
      .def_readonly("means", &GmmModel::means)
      .def_readonly("variances", &GmmModel::variances)
      .def_readonly("iterations", &GmmModel::iterations)
      .def_readonly("converged", &GmmModel::converged)
      .def_readonly("log_likelihood_history", &GmmModel::log_likelihood_history)
      .def("to_json", [](const GmmModel& g) { return seal_model("gmm", gmm_to_json(g)); })
      .def_static("from_json", [](const std::string& text) {
        return gmm_from_json(unseal_model("gmm", text));
      });

  py::class_<HttpResponse>(m, "HttpResponse")
      .def_readonly("status", &HttpResponse::status)
      .def_readonly("body", &HttpResponse::body);

  py::class_<QueryService>(m, "QueryService")
      .def(py::init([](const std::filesystem::path& dir) {
             return std::make_unique<QueryService>(load_service_index(dir));
           }),
           py::arg("index_dir"))
      .def("query", &QueryService::query, py::call_guard<py::gil_scoped_release>())
      .def("index_info", &QueryService::index_info)
      .def("image_statements", &QueryService::image_statements);
}

void declare_api(py::module_& m) {
  m.def("aspect_ratio", &aspect_ratio, py::arg("width"), py::arg("height"));
  m.def(
      "normalize_box",
      [](double x, double y, double w, double h, int image_width, int image_height,
         int color) {
        return normalize_box(RawBox{x, y, w, h, color, {}},
                             ImageMeta{"", image_width, image_height, {}});
      },
      py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"), py::arg("image_width"),
      py::arg("image_height"), py::arg("color") = 0);
  m.def("color_names", [] {
    std::vector<std::string> out;
    for (auto n : color_names()) out.emplace_back(n);
    return out;
  });
  m.def("nearest_color", [](int r, int g, int b) {
    return nearest_color(Rgb{static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                             static_cast<std::uint8_t>(b)});
  });

  m.def("render_statement", &render_statement, py::arg("statement"), py::arg("bins") = 3);
  m.def("parse_statement", &parse_statement, py::arg("text"), py::arg("bins") = 3);
  m.def(
      "histogram_dimension",
      [](int bins, const std::string& mask) {
        return histogram_dimension(bins, PropertyMask::parse(mask));
      },
      py::arg("bins"), py::arg("mask") = "all");
  m.def(
      "histogram_from_statements",
      [](const std::vector<std::string>& texts, int bins) {
        return histogram_from_statements(texts, bins).counts;
      },
      py::arg("texts"), py::arg("bins") = 3);
  m.def(
      "fit_boundaries",
      [](const std::vector<ThingWindow>& windows, int bins) {
        std::vector<SyntaxMatrix> holdout = {SyntaxMatrix{"holdout", windows}};
        return fit_boundaries(holdout, bins);
      },
      py::arg("windows"), py::arg("bins") = 3);
  m.def("quantize_window", &quantize_window, py::arg("window"), py::arg("boundaries"));

  m.def(
      "fit_gmm",
      [](const std::vector<ThingWindow>& windows, int components, std::uint64_t seed) {
        py::gil_scoped_release release;
        return fit_gmm(to_rows(windows), components, seed);
      },
      py::arg("windows"), py::arg("components"), py::arg("seed") = 0);
  m.def(
      "encode_fv",
      [](const std::vector<ThingWindow>& windows, const GmmModel& model, bool average,
         bool signed_sqrt, bool l2) {
        return encode_fv(to_rows(windows), model, FvOptions{average, signed_sqrt, l2})
            .values;
      },
      py::arg("windows"), py::arg("model"), py::arg("average") = true,
      py::arg("signed_sqrt") = true, py::arg("l2") = true);

  m.def(
      "kl_divergence",
      [](const std::vector<double>& p, const std::vector<double>& q) {
        return kl_divergence(std::span<const double>(p), std::span<const double>(q));
      },
      py::arg("p"), py::arg("q"));
  m.def(
      "average_precision",
      [](const std::vector<std::string>& ranked, const std::set<std::string>& relevant) {
        RankedList list;
        for (std::size_t i = 0; i < ranked.size(); ++i) {
          list.push_back({ranked[i], -static_cast<double>(i)});
        }
        return average_precision(list, relevant);
      },
      py::arg("ranked"), py::arg("relevant"));

  m.def(
      "generate_synthetic",
      [](const std::vector<std::string>& archetypes, std::size_t per_class,
         std::uint64_t seed) {
        return windows_to_jsonl(generate_synthetic(archetypes, per_class, seed));
      },
      py::arg("archetypes"), py::arg("per_class"), py::arg("seed") = 0);
  m.def(
      "windows_from_jsonl",
      [](const std::string& text) {
        std::vector<std::vector<ThingWindow>> out;
        for (auto& s : syntax_from_records(parse_windows(text))) out.push_back(s.rows);
        return out;
      },
      py::arg("text"));

  m.def("run_cli", &run_cli, py::arg("args"),
        "Runs a command-line invocation; returns (exit_code, stdout, stderr).");
}

}  // namespace
}  // namespace thingsyntax

PYBIND11_MODULE(_core, m) {
  m.doc() = "Scene retrieval from thing statements and block illustrations";
  auto base = py::register_exception<thingsyntax::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<thingsyntax::ParseError>(m, "ParseError", base.ptr());
  thingsyntax::declare_types(m);
  thingsyntax::declare_api(m);
}
