//! Nonnegative gate matrices and their placement on wires.
//!
//! A gate with `i` inputs and `o` outputs is a `2^i x 2^o` row-major matrix
//! indexed by the input bits then the output bits, first listed wire as the
//! most significant bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
    pub matrix: Vec<f64>,
}

impl Gate {
    pub fn new(name: &str, inputs: usize, outputs: usize, matrix: Vec<f64>) -> Result<Self> {
        if inputs + outputs > 16 {
            return Err(Error::InvalidCircuit(format!("{name}: too many wires")));
        }
        if matrix.len() != 1 << (inputs + outputs) {
            return Err(Error::InvalidCircuit(format!(
                "{name}: {}x{} matrix needs {} entries, got {}",
                1 << inputs,
                1 << outputs,
                1 << (inputs + outputs),
                matrix.len()
            )));
        }
        if matrix.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::InvalidCircuit(format!("{name}: entries must be finite and >= 0")));
        }
        Ok(Gate {
            name: name.to_string(),
            inputs,
            outputs,
            matrix,
        })
    }

    fn from_fn(name: &str, inputs: usize, outputs: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let matrix = (0..1usize << (inputs + outputs))
            .map(|k| f(k >> outputs, k & ((1 << outputs) - 1)))
            .collect();
        Gate {
            name: name.to_string(),
            inputs,
            outputs,
            matrix,
        }
    }

    /// Mixing gate: all-ones 2x2.
    pub fn x() -> Self {
        Self::from_fn("X", 1, 1, |_, _| 1.0)
    }

    pub fn not() -> Self {
        Self::from_fn("NOT", 1, 1, |i, o| f64::from(u8::from(i != o)))
    }

    /// Weight 1 when all three wires agree. `fanout` gives one input and two
    /// outputs, otherwise two inputs merge into one output.
    pub fn split(fanout: bool) -> Self {
        if fanout {
            Self::from_fn("SPLIT", 1, 2, |i, o| f64::from(u8::from(o == 3 * i)))
        } else {
            Self::from_fn("SPLIT", 2, 1, |i, o| f64::from(u8::from(i == 3 * o)))
        }
    }

    /// Output 0 only for input 000.
    pub fn or3() -> Self {
        Self::from_fn("OR3", 3, 1, |i, o| f64::from(u8::from((i != 0) == (o == 1))))
    }

    /// Identity, or `exp(+-J)` weights for a finite ferromagnetic coupling.
    pub fn wire(coupling: Option<f64>) -> Self {
        match coupling {
            None => Self::from_fn("WIRE", 1, 1, |i, o| f64::from(u8::from(i == o))),
            Some(j) => Self::from_fn("WIRE", 1, 1, |i, o| if i == o { j.exp() } else { (-j).exp() }),
        }
    }

    /// First wire is the control: identity on the targets when it is 0,
    /// `g` when it is 1. The control passes through.
    pub fn controlled(g: &Gate) -> Result<Self> {
        if g.inputs != g.outputs {
            return Err(Error::InvalidCircuit(format!(
                "CONTROLLED needs a square gate, {} is {}->{}",
                g.name, g.inputs, g.outputs
            )));
        }
        let t = g.inputs;
        let mask = (1 << t) - 1;
        Ok(Self::from_fn(&format!("CONTROLLED({})", g.name), t + 1, t + 1, |i, o| {
            let (ci, co) = (i >> t, o >> t);
            if ci != co {
                0.0
            } else if ci == 0 {
                f64::from(u8::from(i & mask == o & mask))
            } else {
                g.entry(i & mask, o & mask)
            }
        }))
    }

    pub fn entry(&self, input: usize, output: usize) -> f64 {
        self.matrix[(input << self.outputs) | output]
    }

    pub fn transposed(&self) -> Gate {
        Self::from_fn(&self.name, self.outputs, self.inputs, |o, i| self.entry(i, o))
    }
}

/// A gate bound to wires of the current (`inputs`) and next (`outputs`) layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub gate: Gate,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl Placement {
    pub fn new(gate: Gate, inputs: Vec<usize>, outputs: Vec<usize>) -> Result<Self> {
        if inputs.len() != gate.inputs || outputs.len() != gate.outputs {
            return Err(Error::InvalidCircuit(format!(
                "{} takes {} inputs and {} outputs, got {} and {}",
                gate.name,
                gate.inputs,
                gate.outputs,
                inputs.len(),
                outputs.len()
            )));
        }
        Ok(Placement { gate, inputs, outputs })
    }
}

/// Gate as written in circuit JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: String,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<usize>,
    /// CUSTOM only, `2^inputs` rows of `2^outputs` entries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// WIRE only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    /// CONTROLLED only; its wires are ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Box<GateSpec>>,
}

impl GateSpec {
    pub fn new(kind: &str, inputs: Vec<usize>, outputs: Vec<usize>) -> Self {
        GateSpec {
            kind: kind.to_string(),
            inputs,
            outputs,
            matrix: None,
            coupling: None,
            gate: None,
        }
    }

    /// Builds the gate; arity-dependent kinds read it from the wire lists.
    pub fn to_gate(&self) -> Result<Gate> {
        let (ni, no) = (self.inputs.len(), self.outputs.len());
        match self.kind.to_ascii_uppercase().as_str() {
            "X" => Ok(Gate::x()),
            "NOT" => Ok(Gate::not()),
            "OR3" => Ok(Gate::or3()),
            "WIRE" => Ok(Gate::wire(self.coupling)),
            "SPLIT" => match (ni, no) {
                (1, 2) => Ok(Gate::split(true)),
                (2, 1) => Ok(Gate::split(false)),
                _ => Err(Error::InvalidCircuit(format!("SPLIT must be 1->2 or 2->1, got {ni}->{no}"))),
            },
            "CONTROLLED" => {
                let inner = self
                    .gate
                    .as_ref()
                    .ok_or_else(|| Error::InvalidCircuit("CONTROLLED needs a \"gate\"".into()))?;
                let mut inner = (**inner).clone();
                if inner.inputs.is_empty() && ni > 1 {
                    inner.inputs = self.inputs[1..].to_vec();
                    inner.outputs = self.outputs[1..].to_vec();
                }
                Gate::controlled(&inner.to_gate()?)
            }
            "CUSTOM" => {
                let rows = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::InvalidCircuit("CUSTOM needs a \"matrix\"".into()))?;
                if rows.len() != 1 << ni || rows.iter().any(|r| r.len() != 1 << no) {
                    return Err(Error::InvalidCircuit(format!(
                        "CUSTOM {ni}->{no} needs a {}x{} matrix",
                        1 << ni,
                        1 << no
                    )));
                }
                Gate::new("CUSTOM", ni, no, rows.concat())
            }
            other => Err(Error::InvalidCircuit(format!("unknown gate kind {other:?}"))),
        }
    }

    pub fn to_placement(&self) -> Result<Placement> {
        Placement::new(self.to_gate()?, self.inputs.clone(), self.outputs.clone())
    }
}
