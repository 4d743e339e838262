#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "casimirtc/analysis.hpp"
#include "casimirtc/errors.hpp"
#include "casimirtc/sensitivity.hpp"

namespace py = pybind11;
using namespace casimirtc;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the casimirtc core library";

  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);
  py::register_exception<CalibrationError>(m, "CalibrationError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::enum_<SampleKind>(m, "SampleKind").value("film", SampleKind::film).value("cavity", SampleKind::cavity);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("t_c_k", &ModelParams::t_c_k)
      .def_readwrite("alpha", &ModelParams::alpha)
      .def_readwrite("delta_inf_mk", &ModelParams::delta_inf_mk)
      .def_readwrite("h_v_gauss", &ModelParams::h_v_gauss)
      .def_readwrite("cond_scale", &ModelParams::cond_scale)
      .def("delta_v", &ModelParams::delta_v)
      .def("validate", &ModelParams::validate);

  py::class_<InstrumentConfig>(m, "InstrumentConfig")
      .def(py::init<>())
      .def_readwrite("coil_constant", &InstrumentConfig::coil_constant)
      .def_readwrite("current_resolution", &InstrumentConfig::current_resolution)
      .def_readwrite("base_temperature_k", &InstrumentConfig::base_temperature_k)
      .def_readwrite("normal_resistance", &InstrumentConfig::normal_resistance)
      .def_readwrite("transition_width_mk", &InstrumentConfig::transition_width_mk)
      .def_readwrite("resistance_noise", &InstrumentConfig::resistance_noise)
      .def_readwrite("temperature_jitter_mk", &InstrumentConfig::temperature_jitter_mk)
      .def_readwrite("seed", &InstrumentConfig::seed)
      .def("noiseless", &InstrumentConfig::noiseless)
      .def("validate", &InstrumentConfig::validate);

  py::class_<SweepPlan>(m, "SweepPlan")
      .def(py::init<>())
      .def_readwrite("fields_gauss", &SweepPlan::fields_gauss)
      .def_readwrite("t_center_k", &SweepPlan::t_center_k)
      .def_readwrite("t_span_k", &SweepPlan::t_span_k)
      .def_readwrite("n_points", &SweepPlan::n_points)
      .def_readwrite("repetitions", &SweepPlan::repetitions)
      .def("temperature_grid", &SweepPlan::temperature_grid)
      .def("validate", &SweepPlan::validate);

  py::class_<TransitionCurve>(m, "TransitionCurve")
      .def_readonly("field_gauss", &TransitionCurve::field_gauss)
      .def_readonly("kind", &TransitionCurve::kind)
      .def_readonly("field_index", &TransitionCurve::field_index)
      .def_readonly("repetition", &TransitionCurve::repetition)
      .def_readonly("seed_path", &TransitionCurve::seed_path)
      .def_readonly("temperature_k", &TransitionCurve::temperature_k)
      .def_readonly("resistance_ohm", &TransitionCurve::resistance_ohm)
      .def_readonly("midpoint_in_core", &TransitionCurve::midpoint_in_core)
      .def("__len__", &TransitionCurve::size);

  py::class_<oracle::GroundTruth>(m, "GroundTruth")
      .def_readonly("t_star_k", &oracle::GroundTruth::t_star_k)
      .def_readonly("delta_mk", &oracle::GroundTruth::delta_mk);

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("curves", &Dataset::curves)
      .def_readonly("truth", &Dataset::truth);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("t_star_k", &FitResult::t_star_k)
      .def_readonly("sigma_t_star_k", &FitResult::sigma_t_star_k)
      .def_readonly("width_mk", &FitResult::width_mk)
      .def_readonly("sigma_width_mk", &FitResult::sigma_width_mk)
      .def_readonly("r_n", &FitResult::r_n)
      .def_readonly("sigma_r_n", &FitResult::sigma_r_n)
      .def_readonly("residual_norm", &FitResult::residual_norm)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("iterations", &FitResult::iterations);

  py::class_<TcEstimate>(m, "TcEstimate")
      .def_readonly("t_c_k", &TcEstimate::t_c_k)
      .def_readonly("sigma_k", &TcEstimate::sigma_k)
      .def_readonly("alpha_mk_per_g2", &TcEstimate::alpha_mk_per_g2);

  py::class_<DeltaPoint>(m, "DeltaPoint")
      .def_readonly("field_gauss", &DeltaPoint::field_gauss)
      .def_readonly("delta_mk", &DeltaPoint::delta_mk)
      .def_readonly("sigma_mk", &DeltaPoint::sigma_mk)
      .def_readonly("sigma_local_mk", &DeltaPoint::sigma_local_mk);

  py::class_<DeltaCurve>(m, "DeltaCurve")
      .def_readonly("kind", &DeltaCurve::kind)
      .def_readonly("points", &DeltaCurve::points)
      .def_readonly("t_c", &DeltaCurve::t_c)
      .def_readonly("shared_t_c", &DeltaCurve::shared_t_c);

  py::class_<DerivativePoint>(m, "DerivativePoint")
      .def_readonly("field_gauss", &DerivativePoint::field_gauss)
      .def_readonly("slope", &DerivativePoint::slope)
      .def_readonly("sigma", &DerivativePoint::sigma)
      .def_readonly("one_sided", &DerivativePoint::one_sided);

  py::class_<DerivativeCurve>(m, "DerivativeCurve")
      .def_readonly("kind", &DerivativeCurve::kind)
      .def_readonly("points", &DerivativeCurve::points)
      .def_readonly("window", &DerivativeCurve::window);

  py::class_<Detection>(m, "Detection")
      .def_readonly("mean_difference_mk", &Detection::mean_difference_mk)
      .def_readonly("sigma_mk", &Detection::sigma_mk)
      .def_readonly("z", &Detection::z)
      .def_readonly("capped", &Detection::capped)
      .def_readonly("n_points", &Detection::n_points);

  py::class_<AsymptoticShift>(m, "AsymptoticShift")
      .def_readonly("delta_inf_mk", &AsymptoticShift::delta_inf_mk)
      .def_readonly("sigma_mk", &AsymptoticShift::sigma_mk)
      .def_readonly("delta_v_mk", &AsymptoticShift::delta_v_mk);

  py::class_<LinearityConvergenceReport>(m, "LinearityConvergenceReport")
      .def_readonly("r2_film_low_field", &LinearityConvergenceReport::r2_film_low_field)
      .def_readonly("r2_cavity_low_field", &LinearityConvergenceReport::r2_cavity_low_field)
      .def_readonly("fields_gauss", &LinearityConvergenceReport::fields_gauss)
      .def_readonly("relative_difference", &LinearityConvergenceReport::relative_difference)
      .def_readonly("convergence_field_gauss", &LinearityConvergenceReport::convergence_field_gauss);

  py::class_<FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("relative_tolerance", &FitOptions::relative_tolerance)
      .def_readwrite("max_iterations", &FitOptions::max_iterations);

  py::class_<AnalysisOptions>(m, "AnalysisOptions")
      .def(py::init<>())
      .def_readwrite("h_v_gauss", &AnalysisOptions::h_v_gauss)
      .def_readwrite("derivative_window", &AnalysisOptions::derivative_window)
      .def_readwrite("low_field_limit_gauss", &AnalysisOptions::low_field_limit_gauss)
      .def_readwrite("detection_min_field_gauss", &AnalysisOptions::detection_min_field_gauss)
      .def_readwrite("fit", &AnalysisOptions::fit);

  py::class_<DatasetAnalysis>(m, "DatasetAnalysis")
      .def_readonly("fit_failures", &DatasetAnalysis::fit_failures)
      .def_readonly("film", &DatasetAnalysis::film)
      .def_readonly("cavity", &DatasetAnalysis::cavity)
      .def_readonly("difference", &DatasetAnalysis::difference)
      .def_readonly("film_derivative", &DatasetAnalysis::film_derivative)
      .def_readonly("cavity_derivative", &DatasetAnalysis::cavity_derivative)
      .def_readonly("report", &DatasetAnalysis::report)
      .def_readonly("detection", &DatasetAnalysis::detection)
      .def_readonly("asymptotic_shift", &DatasetAnalysis::asymptotic_shift)
      .def_readonly("warnings", &DatasetAnalysis::warnings);

  py::class_<SensitivityOptions>(m, "SensitivityOptions")
      .def(py::init<>())
      .def_readwrite("z_cap", &SensitivityOptions::z_cap)
      .def_readwrite("detection_threshold", &SensitivityOptions::detection_threshold)
      .def_readwrite("threads", &SensitivityOptions::threads)
      .def_readwrite("trial_offset", &SensitivityOptions::trial_offset)
      .def_readwrite("analysis", &SensitivityOptions::analysis);

  py::class_<SensitivityReport>(m, "SensitivityReport")
      .def_readonly("delta_n_mk", &SensitivityReport::delta_n_mk)
      .def_readonly("trials", &SensitivityReport::trials)
      .def_readonly("failed_trials", &SensitivityReport::failed_trials)
      .def_readonly("valid", &SensitivityReport::valid)
      .def_readonly("detection_z", &SensitivityReport::detection_z)
      .def_readonly("detection_z_std", &SensitivityReport::detection_z_std)
      .def_readonly("detection_rate", &SensitivityReport::detection_rate)
      .def_readonly("mean_difference_mk", &SensitivityReport::mean_difference_mk)
      .def_readonly("derivative_contrast", &SensitivityReport::derivative_contrast)
      .def_readonly("runtime_s", &SensitivityReport::runtime_s)
      .def_readonly("z_values", &SensitivityReport::z_values);

  py::class_<CalibrationOptions>(m, "CalibrationOptions")
      .def(py::init<>())
      .def_readwrite("trials", &CalibrationOptions::trials)
      .def_readwrite("sigma_lo", &CalibrationOptions::sigma_lo)
      .def_readwrite("sigma_hi", &CalibrationOptions::sigma_hi)
      .def_readwrite("bracket_rel_width", &CalibrationOptions::bracket_rel_width)
      .def_readwrite("max_iterations", &CalibrationOptions::max_iterations);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("sigma_r", &CalibrationResult::sigma_r)
      .def_readonly("achieved_delta_n_mk", &CalibrationResult::achieved_delta_n_mk)
      .def_readonly("iterations", &CalibrationResult::iterations);

  m.def("calibrate_defaults", &calibrate_defaults);
  m.def("film_delta", &film_delta, py::arg("params"), py::arg("h_gauss"));
  m.def("cavity_delta", &cavity_delta, py::arg("params"), py::arg("h_gauss"));
  m.def("delta_difference", &delta_difference, py::arg("params"), py::arg("h_gauss"));
  m.def(
      "delta_derivative",
      [](const ModelParams& p, double h, SampleKind kind) { return delta_derivative(p, h, kind).value; },
      py::arg("params"), py::arg("h_gauss"), py::arg("kind"));
  m.def("critical_field", &critical_field, py::arg("params"), py::arg("delta_mk"), py::arg("kind"));
  m.def("model_derivative_contrast", &model_derivative_contrast, py::arg("params"), py::arg("h_gauss"));

  m.def("reference_fields", &reference_fields, py::arg("params"), py::arg("count") = 10);
  m.def("plan_sweep", &plan_sweep, py::arg("params"), py::arg("instrument"), py::arg("fields_gauss"));
  m.def("run_paired_experiment", &run_paired_experiment, py::arg("params"), py::arg("instrument"), py::arg("plan"),
        py::arg("trial") = 0);

  m.def("fit_transition", &fit_transition, py::arg("curve"), py::arg("options") = FitOptions{});
  m.def(
      "analyze_dataset",
      [](const std::vector<TransitionCurve>& curves, const AnalysisOptions& options) {
        return analyze_dataset(curves, options);
      },
      py::arg("curves"), py::arg("options") = AnalysisOptions{});

  m.def("run_sensitivity", &run_sensitivity, py::arg("params"), py::arg("instrument"), py::arg("plan"),
        py::arg("trials"), py::arg("options") = SensitivityOptions{}, py::call_guard<py::gil_scoped_release>());
  m.def("calibrate_noise", &calibrate_noise, py::arg("params"), py::arg("instrument"), py::arg("plan"),
        py::arg("target_delta_n_mk"), py::arg("tolerance") = 0.10, py::arg("calibration") = CalibrationOptions{},
        py::arg("options") = SensitivityOptions{}, py::call_guard<py::gil_scoped_release>());
}
