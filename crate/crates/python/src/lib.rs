//! Python bindings for the cardshare core.
//!
//! Structured results (tokens, deals, reports) are handed over as plain
//! Python objects decoded from their JSON form.

use std::collections::BTreeSet;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use cardshare::eavesdropper::SafetyReport;
use cardshare::field::FieldElement;
use cardshare::params;
use cardshare::protocol::{standard_deck, Card, SuitableParams, Variant};
use cardshare::transcript::{DealRecord, Transcript};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_json<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (json,))
}

fn parse_variant(name: &str) -> PyResult<Variant> {
    match name {
        "shifted" => Ok(Variant::Shifted),
        "unshifted" => Ok(Variant::Unshifted),
        other => Err(value_error(format!("unknown variant {other:?}"))),
    }
}

fn report_to_py<'py>(py: Python<'py>, report: &SafetyReport) -> PyResult<Bound<'py, PyAny>> {
    from_json(py, &serde_json::to_string(report).map_err(value_error)?)
}

/// GF(q) with elements encoded as integers `0..q`.
#[pyclass(name = "Field", frozen)]
struct PyField(cardshare::Field);

impl PyField {
    fn el(&self, v: u32) -> PyResult<FieldElement> {
        self.0.element(v).map_err(value_error)
    }
}

#[pymethods]
impl PyField {
    #[new]
    fn new(q: u64) -> PyResult<Self> {
        cardshare::Field::new(q).map(PyField).map_err(value_error)
    }

    #[getter]
    fn order(&self) -> u32 {
        self.0.order()
    }

    #[getter]
    fn characteristic(&self) -> u32 {
        self.0.characteristic()
    }

    /// Modulus coefficients, constant term first.
    #[getter]
    fn modulus(&self) -> Vec<u32> {
        self.0.spec().modulus.clone()
    }

    fn elements(&self) -> Vec<u32> {
        self.0.elements().map(|x| x.value()).collect()
    }

    fn add(&self, a: u32, b: u32) -> PyResult<u32> {
        Ok(self.el(a)?.add(&self.el(b)?).map_err(value_error)?.value())
    }

    fn sub(&self, a: u32, b: u32) -> PyResult<u32> {
        Ok(self.el(a)?.sub(&self.el(b)?).map_err(value_error)?.value())
    }

    fn mul(&self, a: u32, b: u32) -> PyResult<u32> {
        Ok(self.el(a)?.mul(&self.el(b)?).map_err(value_error)?.value())
    }

    fn neg(&self, a: u32) -> PyResult<u32> {
        Ok(self.el(a)?.neg().value())
    }

    fn inv(&self, a: u32) -> PyResult<u32> {
        Ok(self.el(a)?.inv().map_err(value_error)?.value())
    }

    fn pow(&self, a: u32, exp: u64) -> PyResult<u32> {
        Ok(self.el(a)?.pow(exp).value())
    }

    fn __repr__(&self) -> String {
        format!("Field({})", self.0.order())
    }
}

/// Validated suitable parameters.
#[pyclass(name = "Params", frozen)]
struct PyParams(SuitableParams);

#[pymethods]
impl PyParams {
    #[new]
    fn new(m: usize, q: u64, d: usize, tau: Vec<usize>) -> PyResult<Self> {
        cardshare::validate_suitable(m, q, d, &tau).map(PyParams).map_err(value_error)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    #[getter]
    fn q(&self) -> u64 {
        self.0.q()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    #[getter]
    fn tau(&self) -> Vec<usize> {
        self.0.tau().sizes().to_vec()
    }

    #[getter]
    fn deck_size(&self) -> usize {
        self.0.deck_size()
    }

    fn __repr__(&self) -> String {
        format!("Params(m={}, q={}, d={}, tau={})", self.0.m(), self.0.q(), self.0.d(), self.0.tau())
    }
}

/// Hand sizes with Alice holding `q^{d+1} − q^d` and the rest split evenly.
#[pyfunction]
fn balanced_tau(m: usize, q: u64, d: usize) -> PyResult<Vec<usize>> {
    let (tau, _) = params::balanced_tau(m, q, d).map_err(value_error)?;
    Ok(tau.sizes().to_vec())
}

/// Rows `(tau, m, q, d)` for `2 ≤ m ≤ max_m`, `2 ≤ d ≤ max_d`.
#[pyfunction]
fn parameter_table(max_m: usize, max_d: usize) -> Vec<(Vec<usize>, usize, u64, usize)> {
    params::parameter_table(max_m, max_d)
        .into_iter()
        .map(|r| (r.tau.sizes().to_vec(), r.m, r.q, r.d))
        .collect()
}

/// A seeded in-process session over the deck `0..|tau|`.
#[pyclass(name = "Session")]
struct PySession(cardshare::Session);

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (params, seed, variant = "shifted", hands = None))]
    fn new(params: &PyParams, seed: u64, variant: &str, hands: Option<Vec<Vec<u32>>>) -> PyResult<Self> {
        let variant = parse_variant(variant)?;
        let session = match hands {
            Some(hands) => {
                let hands = hands.into_iter().map(|h| h.into_iter().map(Card).collect::<BTreeSet<_>>()).collect();
                let deal = cardshare::Deal::from_hands(hands).map_err(value_error)?;
                cardshare::Session::with_deal(&params.0, deal, seed, variant)
            }
            None => cardshare::new_session(&params.0, &standard_deck(params.0.deck_size()), seed, variant),
        };
        session.map(PySession).map_err(value_error)
    }

    #[getter]
    fn is_complete(&self) -> bool {
        self.0.is_complete()
    }

    /// Lets the next agent speak and returns its token.
    fn step<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        self.0.step().map_err(value_error)?;
        let transcript = self.0.transcript();
        let token = transcript.tokens.last().expect("just spoke");
        from_json(py, &serde_json::to_string(token).map_err(value_error)?)
    }

    fn run_to_completion(&mut self) -> PyResult<()> {
        self.0.run_to_completion().map_err(value_error)
    }

    /// The true deal as `{"tau": [...], "hands": {"A": [...], ...}}`.
    fn deal<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        from_json(py, &DealRecord::from_deal(self.0.deal()).to_json())
    }

    fn transcript_json(&self) -> String {
        self.0.transcript().to_json()
    }

    /// Whether every agent's reconstruction equals the true deal.
    fn all_informed(&self) -> PyResult<bool> {
        let outcome = self.0.finish().map_err(value_error)?;
        Ok(outcome.reconstructions.values().all(|d| d == self.0.deal()))
    }

    /// Eve's safety report for the finished run.
    fn report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let outcome = self.0.finish().map_err(value_error)?;
        report_to_py(py, &outcome.report)
    }
}

/// Eve's safety report for a transcript given as JSON text.
#[pyfunction]
fn analyze_transcript<'py>(py: Python<'py>, json: &str) -> PyResult<Bound<'py, PyAny>> {
    let t = Transcript::from_json(json).map_err(value_error)?;
    let params = t.params().map_err(value_error)?;
    let run = t.run().map_err(value_error)?;
    let report = cardshare::probability_report(&run, &params, t.variant).map_err(value_error)?;
    report_to_py(py, &report)
}

/// Report for the pinned 16-card example on F_4^2.
#[pyfunction]
#[pyo3(signature = (variant = "shifted"))]
fn worked_example_report<'py>(py: Python<'py>, variant: &str) -> PyResult<Bound<'py, PyAny>> {
    let variant = parse_variant(variant)?;
    let run = cardshare::fixtures::worked_example_run(variant);
    let params = cardshare::fixtures::worked_example_params();
    let report = cardshare::probability_report(&run, &params, variant).map_err(value_error)?;
    report_to_py(py, &report)
}

#[pymodule]
fn cardshare_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyField>()?;
    m.add_class::<PyParams>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(balanced_tau, m)?)?;
    m.add_function(wrap_pyfunction!(parameter_table, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_transcript, m)?)?;
    m.add_function(wrap_pyfunction!(worked_example_report, m)?)?;
    Ok(())
}
