// Python module: reset/step/spec over the native environment.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "gridenv/config.hpp"
#include "gridenv/environment.hpp"
#include "gridenv/error.hpp"

namespace py = pybind11;
using namespace gridenv;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Environment make_env(const std::string& config, const std::vector<std::string>& overrides) {
  ConfigFile f = ConfigFile::load(config);
  for (const auto& o : overrides) f.set_override(o);
  return Environment::from_config(env_config_from(f));
}

py::dict info_dict(const StepResult& r) {
  const StepInfo& i = r.info;
  py::dict d;
  d["survival"] = i.survival;
  d["truncated"] = i.truncated;
  d["valid"] = i.valid;
  d["feasible"] = i.feasible;
  d["termination"] = i.termination;
  d["r_survive"] = i.r_survive;
  d["r_overload"] = i.r_overload;
  d["r_cost"] = i.r_cost;
  d["p_gen"] = i.p_gen;
  d["p_demand"] = i.p_demand;
  d["losses"] = i.losses;
  d["margin"] = i.metrics.margin;
  d["overload_metric"] = i.metrics.overload;
  d["topology_metric"] = i.metrics.topology;
  d["opponent_line"] = i.opponent_line;
  d["overload_disconnections"] = i.overload_disconnections;
  return d;
}

// One environment handle. Not shareable across threads.
class Handle {
 public:
  Handle(const std::string& config, const std::vector<std::string>& overrides)
      : env_(make_env(config, overrides)) {
    for (const Action& a : env_.action_space().actions()) encoded_.push_back(encode_action(a));
  }

  py::array_t<double> reset(std::uint64_t seed) {
    state_ = env_.reset(seed);
    return to_array(env_.observe(*state_));
  }

  py::tuple step(const py::object& action) {
    if (!state_) throw std::logic_error("step called before reset");
    if (state_->done) throw std::logic_error("episode is over; call reset()");
    const Action a = decode(action);
    env_.validate_action(a);
    const StepResult r = env_.step(*state_, a);
    return py::make_tuple(to_array(r.observation), r.reward, py::make_tuple(r.lsi, r.tlo), r.done,
                          info_dict(r));
  }

  std::string spec_json() const { return env_.spec().to_json(); }
  int observation_size() const { return env_.layout().size; }
  const std::vector<std::string>& actions() const { return encoded_; }
  bool done() const { return state_ && state_->done; }

 private:
  Action decode(const py::object& action) const {
    if (py::isinstance<py::int_>(action)) {
      const long i = action.cast<long>();
      if (env_.config().task != TaskKind::Topology)
        throw ActionError("continuous task expects a float array");
      if (i < 0 || i >= env_.action_space().size())
        throw ActionError("action index " + std::to_string(i) + " outside [0, " +
                          std::to_string(env_.action_space().size()) + ")");
      return env_.action_space()[static_cast<int>(i)];
    }
    if (py::isinstance<py::str>(action)) return decode_action(action.cast<std::string>());
    return ContinuousAction{action.cast<std::vector<double>>()};
  }

  Environment env_;
  std::optional<EnvState> state_;
  std::vector<std::string> encoded_;
};

// k independent handles stepped in lockstep.
class VectorHandle {
 public:
  VectorHandle(const std::string& config, int k, const std::vector<std::string>& overrides) {
    if (k < 1) throw std::invalid_argument("need at least one environment");
    for (int i = 0; i < k; ++i) envs_.emplace_back(config, overrides);
  }

  py::array_t<double> reset(const std::vector<std::uint64_t>& seeds) {
    if (seeds.size() != envs_.size()) throw std::invalid_argument("one seed per environment");
    const py::ssize_t n = envs_.front().observation_size();
    py::array_t<double> out({static_cast<py::ssize_t>(envs_.size()), n});
    for (std::size_t i = 0; i < envs_.size(); ++i) {
      const auto o = envs_[i].reset(seeds[i]);
      std::copy(o.data(), o.data() + n, out.mutable_data(i, 0));
    }
    return out;
  }

  py::tuple step(const py::list& actions) {
    if (actions.size() != envs_.size()) throw std::invalid_argument("one action per environment");
    const py::ssize_t k = static_cast<py::ssize_t>(envs_.size());
    const py::ssize_t n = envs_.front().observation_size();
    py::array_t<double> obs({k, n});
    py::array_t<double> rewards(k);
    py::array_t<int> costs({k, py::ssize_t{2}});
    py::array_t<bool> done(k);
    py::list infos;
    for (py::ssize_t i = 0; i < k; ++i) {
      const py::tuple t = envs_[i].step(actions[i]);
      const auto o = t[0].cast<py::array_t<double>>();
      std::copy(o.data(), o.data() + n, obs.mutable_data(i, 0));
      rewards.mutable_at(i) = t[1].cast<double>();
      const auto c = t[2].cast<py::tuple>();
      costs.mutable_at(i, 0) = c[0].cast<int>();
      costs.mutable_at(i, 1) = c[1].cast<int>();
      done.mutable_at(i) = t[3].cast<bool>();
      infos.append(t[4]);
    }
    return py::make_tuple(obs, rewards, costs, done, infos);
  }

  int size() const { return static_cast<int>(envs_.size()); }

 private:
  std::vector<Handle> envs_;
};

}  // namespace

PYBIND11_MODULE(_native, m) {
  m.doc() = "Native power-grid control environment";
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<ParseError>(m, "ParseError");
  py::register_exception<IntegrityError>(m, "IntegrityError");
  py::register_exception<ActionError>(m, "ActionError", PyExc_ValueError);

  py::class_<Handle>(m, "Env")
      .def(py::init<const std::string&, const std::vector<std::string>&>(), py::arg("config"),
           py::arg("overrides") = std::vector<std::string>{})
      .def("reset", &Handle::reset, py::arg("seed") = 0)
      .def("step", &Handle::step, py::arg("action"))
      .def("spec_json", &Handle::spec_json)
      .def_property_readonly("observation_size", &Handle::observation_size)
      .def_property_readonly("actions", &Handle::actions)
      .def_property_readonly("done", &Handle::done);

  py::class_<VectorHandle>(m, "VectorEnv")
      .def(py::init<const std::string&, int, const std::vector<std::string>&>(), py::arg("config"),
           py::arg("k"), py::arg("overrides") = std::vector<std::string>{})
      .def("reset", &VectorHandle::reset, py::arg("seeds"))
      .def("step", &VectorHandle::step, py::arg("actions"))
      .def_property_readonly("size", &VectorHandle::size);
}
