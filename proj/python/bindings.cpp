#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "net3/dataset.hpp"
#include "net3/error.hpp"
#include "net3/experiment.hpp"
#include "net3/graph.hpp"
#include "net3/tensor.hpp"
#include "net3/tgcn.hpp"
#include "net3/trnn.hpp"

namespace py = pybind11;
using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

namespace {

net3::DenseTensor to_tensor(const Array& a) {
  if (a.ndim() == 0) throw net3::ShapeError("expected an array with at least one dimension");
  net3::Shape shape(a.shape(), a.shape() + a.ndim());
  return net3::DenseTensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

net3::Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw net3::ShapeError("expected a 2-d array");
  return net3::Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                      std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_tensor(const net3::DenseTensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Array from_matrix(const net3::Matrix& m) {
  Array out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<net3::ModeNetwork> to_networks(const std::vector<std::optional<Array>>& nets, const net3::Shape& dims) {
  if (nets.size() != dims.size()) throw net3::ShapeError("need one network (or None) per node mode");
  std::vector<net3::ModeNetwork> out;
  for (std::size_t m = 0; m < nets.size(); ++m) {
    out.push_back(nets[m] ? net3::ModeNetwork::from_adjacency(to_matrix(*nets[m]))
                          : net3::ModeNetwork::identity(dims[m]));
  }
  return out;
}

py::dict dataset_dict(const net3::NetTensorTimeSeries& ds) {
  py::dict d;
  d["values"] = from_tensor(ds.values);
  py::list nets;
  for (const auto& n : ds.networks) {
    if (n.is_identity) {
      nets.append(py::none());
    } else {
      nets.append(from_matrix(n.raw));
    }
  }
  d["networks"] = nets;
  py::array_t<bool> mask(std::vector<py::ssize_t>(ds.mask.shape.begin(), ds.mask.shape.end()));
  std::transform(ds.mask.data.begin(), ds.mask.data.end(), mask.mutable_data(), [](std::uint8_t b) { return b != 0; });
  d["mask"] = mask;
  d["mode_names"] = ds.mode_names;
  return d;
}

net3::NetTensorTimeSeries dataset_from(const Array& values, const std::vector<std::optional<Array>>& networks,
                                       const std::optional<py::array_t<bool>>& mask) {
  net3::NetTensorTimeSeries ds;
  ds.values = to_tensor(values);
  ds.networks = to_networks(networks, ds.node_dims());
  if (mask) {
    ds.mask.shape = net3::Shape(mask->shape(), mask->shape() + mask->ndim());
    ds.mask.data.assign(mask->data(), mask->data() + mask->size());
  } else {
    ds.mask = net3::Mask::filled(ds.values.shape(), true);
  }
  ds.validate();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_net3, m) {
  m.doc() = "Networked tensor time series: tensor kernels, graph layers, parameter counts and training";

  py::register_exception<net3::ShapeError>(m, "ShapeError", PyExc_ValueError);
  py::register_exception<net3::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<net3::ValidationError>(m, "ValidationError", PyExc_ValueError);

  m.def(
      "mode_product",
      [](const Array& x, const Array& u, std::size_t mode) {
        return from_tensor(net3::mode_product(to_tensor(x), to_matrix(u), mode));
      },
      py::arg("x"), py::arg("u"), py::arg("mode"), "(x ×_mode u); u is N_mode × N'.");
  m.def(
      "unfold", [](const Array& x, std::size_t mode) { return from_matrix(net3::unfold(to_tensor(x), mode)); },
      py::arg("x"), py::arg("mode"));
  m.def(
      "fold",
      [](const Array& mat, const net3::Shape& shape, std::size_t mode) {
        return from_tensor(net3::fold(to_matrix(mat), shape, mode));
      },
      py::arg("mat"), py::arg("shape"), py::arg("mode"));
  m.def(
      "kronecker", [](const Array& a, const Array& b) { return from_matrix(net3::kronecker(to_matrix(a), to_matrix(b))); },
      py::arg("a"), py::arg("b"));
  m.def(
      "hosvd",
      [](const Array& x, const std::vector<std::size_t>& ranks) {
        const auto r = net3::hosvd(to_tensor(x), ranks);
        py::list factors;
        for (const auto& f : r.factors) factors.append(from_matrix(f));
        return py::make_tuple(from_tensor(r.core), factors);
      },
      py::arg("x"), py::arg("ranks"), "Returns (core, factors) with factors N_m × r_m.");

  m.def(
      "symmetric_normalize", [](const Array& a) { return from_matrix(net3::symmetric_normalize(to_matrix(a))); },
      py::arg("a"));
  m.def(
      "laplacian", [](const Array& a) { return from_matrix(net3::laplacian(to_matrix(a))); }, py::arg("a"));
  m.def(
      "pearson_adjacency", [](const Array& s) { return from_matrix(net3::pearson_adjacency(to_matrix(s))); },
      py::arg("series"));
  m.def(
      "flatten_kronecker",
      [](const std::vector<Array>& adjacencies) {
        std::vector<net3::ModeNetwork> nets;
        for (const auto& a : adjacencies) nets.push_back(net3::ModeNetwork::from_adjacency(to_matrix(a)));
        return from_matrix(net3::flatten_kronecker(nets));
      },
      py::arg("adjacencies"), "A_M ⊗ … ⊗ A_1 for adjacencies listed from mode 0.");

  using Dims = std::vector<std::size_t>;
  m.def(
      "core_dims", [](double rho, const Dims& dims) { return net3::core_dims(rho, dims); }, py::arg("rho"),
      py::arg("dims"));
  m.def(
      "count_params_tlstm",
      [](const Dims& dims, double rho, std::size_t d, std::size_t dp) {
        return net3::count_params_tlstm(dims, rho, d, dp);
      },
      py::arg("dims"), py::arg("rho"), py::arg("d"), py::arg("d_prime"));
  m.def(
      "count_params_mlstm",
      [](const Dims& dims, std::size_t d, std::size_t dp) { return net3::count_params_mlstm(dims, d, dp); },
      py::arg("dims"), py::arg("d"), py::arg("d_prime"));
  m.def(
      "rho_upper_bound",
      [](const Dims& dims, std::size_t d, std::size_t dp) { return net3::rho_upper_bound(dims, d, dp); },
      py::arg("dims"), py::arg("d"), py::arg("d_prime"));
  m.def(
      "tgcl_flops", [](const Dims& dims, std::size_t k) { return net3::tgcl_flops(dims, k); }, py::arg("dims"),
      py::arg("k"));

  m.def(
      "synthesize",
      [](const net3::Shape& dims, const net3::Shape& core, std::size_t steps, double noise, double process_noise,
         double spectral_radius, std::uint64_t seed) {
        net3::SynthConfig c;
        c.dims = dims;
        c.core = core;
        c.steps = steps;
        c.noise = noise;
        c.process_noise = process_noise;
        c.spectral_radius = spectral_radius;
        return dataset_dict(net3::synthesize(c, seed));
      },
      py::arg("dims"), py::arg("core"), py::arg("steps") = 400, py::arg("noise") = 0.05,
      py::arg("process_noise") = 0.3, py::arg("spectral_radius") = 0.95, py::arg("seed") = 0);
  m.def(
      "load_dataset", [](const std::string& dir) { return dataset_dict(net3::load_dataset(dir)); }, py::arg("dir"));
  m.def(
      "save_dataset",
      [](const std::string& dir, const Array& values, const std::vector<std::optional<Array>>& networks,
         const std::optional<py::array_t<bool>>& mask) { net3::save_dataset(dataset_from(values, networks, mask), dir); },
      py::arg("dir"), py::arg("values"), py::arg("networks"), py::arg("mask") = py::none());

  m.def(
      "train",
      [](const Array& values, const std::vector<std::optional<Array>>& networks,
         const std::optional<py::array_t<bool>>& mask, const std::string& task, const std::string& variant,
         std::size_t epochs, std::size_t hidden, std::size_t state, double rho, std::size_t omega, double lr,
         std::size_t batch_size, std::optional<double> test_fraction, std::uint64_t seed) {
        net3::RunConfig c;
        c.task = net3::parse_task(task);
        c.variant = net3::parse_variant(variant);
        c.epochs = epochs;
        c.hidden = hidden;
        c.state = state;
        c.rho = rho;
        c.omega = omega;
        c.lr = lr;
        c.batch_size = batch_size;
        c.test_fraction = test_fraction.value_or(c.task == net3::Task::future ? 0.1 : 0.2);
        c.seed = seed;
        const auto ds = dataset_from(values, networks, mask);
        net3::TrainOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = net3::train_task(net3::prepare_task(ds, c), c);
        }
        py::list losses;
        for (const auto& r : outcome.history) losses.append(r.train_loss);
        py::dict out;
        out["train_loss"] = losses;
        out["rmse"] = outcome.evaluation.rmse;
        out["rmse_raw"] = outcome.evaluation.rmse_raw;
        out["baseline"] = outcome.evaluation.baseline;
        out["baseline_rmse"] = outcome.evaluation.baseline_rmse;
        out["parameters"] = outcome.params.parameter_count();
        return out;
      },
      py::arg("values"), py::arg("networks"), py::arg("mask") = py::none(), py::arg("task") = "future",
      py::arg("variant") = "net3", py::arg("epochs") = 200, py::arg("hidden") = 8, py::arg("state") = 8,
      py::arg("rho") = 0.8, py::arg("omega") = 5, py::arg("lr") = 0.01, py::arg("batch_size") = 0,
      py::arg("test_fraction") = py::none(), py::arg("seed") = 0,
      "Train on an in-memory dataset and score the held-out split against the baseline.");
}
