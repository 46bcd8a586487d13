#include "mecswarm/apso.hpp"
#include "mecswarm/controller.hpp"
#include "mecswarm/cost.hpp"
#include "mecswarm/env.hpp"
#include "mecswarm/harness.hpp"
#include "mecswarm/pso.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace mecswarm;

namespace {

pso::RunResult run_apso_sac(const std::string& checkpoint, const Environment& env,
                            const pso::PsoParams& base, const ctrl::ActionMapping& mapping,
                            const Weights& weights, const FeasibilityMode& mode,
                            std::uint64_t run_seed) {
    sac::SacAgent agent = sac::SacAgent::load_checkpoint(checkpoint);
    ctrl::ControllerParams params;
    params.base = base;
    params.mapping = mapping;
    return ctrl::run_episode(&agent, env, params, weights, mode, run_seed).result;
}

} // namespace

PYBIND11_MODULE(_mecswarm, m) {
    m.doc() = "Task-offloading optimization toolkit for simulated MEC fleets";

    py::class_<Interval>(m, "Interval")
        .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
        .def_readwrite("lo", &Interval::lo)
        .def_readwrite("hi", &Interval::hi);

    py::class_<Device>(m, "Device")
        .def(py::init<double, double, double, double>(), py::arg("data_size_mb"),
             py::arg("completion_req_mi"), py::arg("ram_req_gb"), py::arg("network_speed_mbps"))
        .def_readwrite("data_size_mb", &Device::data_size_mb)
        .def_readwrite("completion_req_mi", &Device::completion_req_mi)
        .def_readwrite("ram_req_gb", &Device::ram_req_gb)
        .def_readwrite("network_speed_mbps", &Device::network_speed_mbps);

    py::class_<Server>(m, "Server")
        .def(py::init<double, double, double>(), py::arg("speed_mips"), py::arg("cost_rate"),
             py::arg("ram_gb"))
        .def_readwrite("speed_mips", &Server::speed_mips)
        .def_readwrite("cost_rate", &Server::cost_rate)
        .def_readwrite("ram_gb", &Server::ram_gb);

    py::class_<EnvRanges>(m, "EnvRanges")
        .def(py::init<>())
        .def_readwrite("data_size", &EnvRanges::data_size)
        .def_readwrite("completion_req", &EnvRanges::completion_req)
        .def_readwrite("ram_req", &EnvRanges::ram_req)
        .def_readwrite("network_speed", &EnvRanges::network_speed)
        .def_readwrite("server_speed", &EnvRanges::server_speed)
        .def_readwrite("server_cost", &EnvRanges::server_cost)
        .def_readwrite("server_ram", &EnvRanges::server_ram);

    py::class_<EnvConfig>(m, "EnvConfig")
        .def(py::init<>())
        .def_readwrite("n_devices", &EnvConfig::n_devices)
        .def_readwrite("n_servers", &EnvConfig::n_servers)
        .def_readwrite("seed", &EnvConfig::seed)
        .def_readwrite("ranges", &EnvConfig::ranges);

    py::class_<Environment>(m, "Environment")
        .def_readonly("devices", &Environment::devices)
        .def_readonly("servers", &Environment::servers)
        .def_readonly("config", &Environment::config);

    m.def("generate_environment", &generate_environment, py::arg("config"));
    m.def("save_environment", &save_environment, py::arg("env"), py::arg("path"));
    m.def("load_environment", &load_environment, py::arg("path"));

    py::class_<Assignment>(m, "Assignment")
        .def(py::init<>())
        .def(py::init([](std::vector<std::int32_t> server_of) {
                 return Assignment{std::move(server_of)};
             }),
             py::arg("server_of"))
        .def_readwrite("server_of", &Assignment::server_of);

    py::class_<Weights>(m, "Weights")
        .def(py::init<>())
        .def(py::init<double, double>(), py::arg("m"), py::arg("n"))
        .def_readwrite("m", &Weights::m)
        .def_readwrite("n", &Weights::n);

    py::class_<FeasibilityMode>(m, "FeasibilityMode")
        .def_static("literal", &FeasibilityMode::literal)
        .def_static("penalty", &FeasibilityMode::penalty, py::arg("per_violation") = 1000.0)
        .def_readonly("penalty_per_violation", &FeasibilityMode::penalty_per_violation);

    py::class_<CostBreakdown>(m, "CostBreakdown")
        .def_readonly("total", &CostBreakdown::total)
        .def_readonly("per_device_time", &CostBreakdown::per_device_time)
        .def_readonly("per_device_cost", &CostBreakdown::per_device_cost)
        .def_readonly("infeasible_count", &CostBreakdown::infeasible_count);

    m.def("device_time", &device_time, py::arg("device"), py::arg("server"),
          py::arg("mb_to_mbit") = kMbToMbit);
    m.def("device_comp_cost", &device_comp_cost, py::arg("device"), py::arg("server"),
          py::arg("mode"), py::arg("mb_to_mbit") = kMbToMbit);
    m.def("total_cost", &total_cost, py::arg("env"), py::arg("assignment"), py::arg("weights"),
          py::arg("mode"), py::arg("mb_to_mbit") = kMbToMbit);
    m.def("brute_force_optimum", &brute_force_optimum, py::arg("env"), py::arg("weights"),
          py::arg("mode"), py::arg("cap") = 1'000'000, py::arg("mb_to_mbit") = kMbToMbit);

    py::class_<pso::PsoParams>(m, "PsoParams")
        .def(py::init<>())
        .def_readwrite("inertia", &pso::PsoParams::inertia)
        .def_readwrite("c1", &pso::PsoParams::c1)
        .def_readwrite("c2", &pso::PsoParams::c2)
        .def_readwrite("n_particles", &pso::PsoParams::n_particles)
        .def_readwrite("max_iters", &pso::PsoParams::max_iters)
        .def_readwrite("u_low", &pso::PsoParams::u_low)
        .def_readwrite("u_high", &pso::PsoParams::u_high)
        .def_readwrite("v_max", &pso::PsoParams::v_max)
        .def_readwrite("scalar_draws", &pso::PsoParams::scalar_draws);

    py::class_<pso::Coefficients>(m, "Coefficients")
        .def_readonly("inertia", &pso::Coefficients::inertia)
        .def_readonly("c1", &pso::Coefficients::c1)
        .def_readonly("c2", &pso::Coefficients::c2);

    py::class_<pso::RunResult>(m, "RunResult")
        .def_readonly("best_cost", &pso::RunResult::best_cost)
        .def_readonly("best_assignment", &pso::RunResult::best_assignment)
        .def_readonly("curve", &pso::RunResult::curve)
        .def_readonly("wall_time_seconds", &pso::RunResult::wall_time_seconds)
        .def_readonly("coefficient_trace", &pso::RunResult::coefficient_trace);

    m.def("run_pso", &pso::run, py::arg("env"), py::arg("params"), py::arg("weights"),
          py::arg("mode"), py::arg("seed"), py::arg("mb_to_mbit") = kMbToMbit);

    py::class_<apso::ApsoParams>(m, "ApsoParams")
        .def(py::init<>())
        .def_readwrite("base", &apso::ApsoParams::base)
        .def_readwrite("c_min", &apso::ApsoParams::c_min)
        .def_readwrite("c_max", &apso::ApsoParams::c_max)
        .def_readwrite("c_sum_max", &apso::ApsoParams::c_sum_max)
        .def_readwrite("delta_range", &apso::ApsoParams::delta_range)
        .def_readwrite("coefficient_adaptation", &apso::ApsoParams::coefficient_adaptation)
        .def_readwrite("inertia_adaptation", &apso::ApsoParams::inertia_adaptation)
        .def_readwrite("els_enabled", &apso::ApsoParams::els_enabled)
        .def_readwrite("els_sigma_range", &apso::ApsoParams::els_sigma_range);

    m.def("run_apso", &apso::run_apso, py::arg("env"), py::arg("params"), py::arg("weights"),
          py::arg("mode"), py::arg("seed"), py::arg("mb_to_mbit") = kMbToMbit);
    m.def("evolutionary_factor",
          py::overload_cast<const pso::SwarmState&>(&apso::evolutionary_factor), py::arg("swarm"));
    m.def("adapt_inertia", &apso::adapt_inertia, py::arg("f"));

    py::class_<ctrl::ActionMapping>(m, "ActionMapping")
        .def(py::init<>())
        .def_readwrite("c_min", &ctrl::ActionMapping::c_min)
        .def_readwrite("c_max", &ctrl::ActionMapping::c_max)
        .def("to_coefficient", &ctrl::ActionMapping::to_coefficient)
        .def("to_action", &ctrl::ActionMapping::to_action);

    m.def("run_apso_sac", &run_apso_sac, py::arg("checkpoint"), py::arg("env"), py::arg("base"),
          py::arg("mapping"), py::arg("weights"), py::arg("mode"), py::arg("seed"),
          "run one deterministic-policy episode of the trained controller");

    m.def("paired_stats", [](const std::vector<double>& a, const std::vector<double>& b) {
        const harness::PairedStats s = harness::paired_stats(a, b);
        py::dict d;
        d["n_pairs"] = s.n_pairs;
        d["mean_diff"] = s.mean_diff;
        d["sign_test_p"] = s.sign_test_p;
        d["wilcoxon_w"] = s.wilcoxon_w;
        return d;
    });

    m.attr("__version__") = "0.1.0";
}
