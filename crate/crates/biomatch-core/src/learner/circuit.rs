//! Boolean circuits and their compilation into threshold networks.
//!
//! Any circuit over AND/OR/NOT gates compiles into a fully-connected
//! network with threshold activations whose 0/1 output matches the
//! circuit on every Boolean input, one network layer per gate level.

use thiserror::Error;

use super::matrix::Matrix;
use super::net::{ActivationKind, Layer, NeuralNetwork, Shape};
use super::LearnerError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("circuit contains a cycle")]
    Cycle,
    #[error("gate {gate} has no predecessors")]
    DanglingGate { gate: usize },
    #[error("gate {gate} references missing gate {reference}")]
    InvalidReference { gate: usize, reference: usize },
    #[error("gate {gate} has the wrong arity for its kind")]
    InvalidArity { gate: usize },
    #[error("output index {output} is out of range")]
    OutputOutOfRange { output: usize },
    #[error("circuit has no input gates")]
    NoInputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Input,
    And,
    Or,
    Not,
}

/// One vertex of the circuit DAG. `inputs` hold indices of predecessor
/// gates in the circuit's gate list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<usize>,
}

impl Gate {
    pub fn input() -> Gate {
        Gate {
            kind: GateKind::Input,
            inputs: Vec::new(),
        }
    }

    pub fn and(inputs: Vec<usize>) -> Gate {
        Gate {
            kind: GateKind::And,
            inputs,
        }
    }

    pub fn or(inputs: Vec<usize>) -> Gate {
        Gate {
            kind: GateKind::Or,
            inputs,
        }
    }

    pub fn not(input: usize) -> Gate {
        Gate {
            kind: GateKind::Not,
            inputs: vec![input],
        }
    }
}

/// A validated acyclic AND/OR/NOT circuit with a designated output gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanCircuit {
    gates: Vec<Gate>,
    output: usize,
    /// Input-gate indices in gate order; input j of an evaluation feeds
    /// the j-th entry.
    input_gates: Vec<usize>,
    /// Gate level: inputs at 0, otherwise 1 + max over predecessors.
    levels: Vec<usize>,
}

impl BooleanCircuit {
    pub fn new(gates: Vec<Gate>, output: usize) -> Result<Self, CircuitError> {
        if output >= gates.len() {
            return Err(CircuitError::OutputOutOfRange { output });
        }
        let input_gates: Vec<usize> = gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == GateKind::Input)
            .map(|(i, _)| i)
            .collect();
        if input_gates.is_empty() {
            return Err(CircuitError::NoInputs);
        }
        for (idx, gate) in gates.iter().enumerate() {
            match gate.kind {
                GateKind::Input => {
                    if !gate.inputs.is_empty() {
                        return Err(CircuitError::InvalidArity { gate: idx });
                    }
                }
                GateKind::Not => {
                    if gate.inputs.len() != 1 {
                        return Err(CircuitError::InvalidArity { gate: idx });
                    }
                }
                GateKind::And | GateKind::Or => {
                    if gate.inputs.is_empty() {
                        return Err(CircuitError::DanglingGate { gate: idx });
                    }
                }
            }
            for &reference in &gate.inputs {
                if reference >= gates.len() {
                    return Err(CircuitError::InvalidReference {
                        gate: idx,
                        reference,
                    });
                }
            }
        }
        let levels = compute_levels(&gates)?;
        Ok(BooleanCircuit {
            gates,
            output,
            input_gates,
            levels,
        })
    }

    pub fn input_arity(&self) -> usize {
        self.input_gates.len()
    }

    /// Vertex count of the longest input-to-output path: the input layer
    /// plus one per gate level feeding the output.
    pub fn depth(&self) -> usize {
        self.levels[self.output] + 1
    }

    /// Direct evaluation of the DAG.
    ///
    /// # Panics
    ///
    /// Panics when `inputs` does not match the circuit's input arity.
    pub fn evaluate(&self, inputs: &[bool]) -> bool {
        assert_eq!(inputs.len(), self.input_arity(), "wrong input count");
        let mut values = vec![None::<bool>; self.gates.len()];
        for (j, &gate_idx) in self.input_gates.iter().enumerate() {
            values[gate_idx] = Some(inputs[j]);
        }
        // levels give a valid evaluation order
        let mut order: Vec<usize> = (0..self.gates.len()).collect();
        order.sort_by_key(|&i| self.levels[i]);
        for idx in order {
            if values[idx].is_some() {
                continue;
            }
            let gate = &self.gates[idx];
            let operands: Vec<bool> = gate
                .inputs
                .iter()
                .map(|&p| values[p].expect("predecessors evaluated first"))
                .collect();
            values[idx] = Some(match gate.kind {
                GateKind::And => operands.iter().all(|&b| b),
                GateKind::Or => operands.iter().any(|&b| b),
                GateKind::Not => !operands[0],
                GateKind::Input => unreachable!("inputs were seeded"),
            });
        }
        values[self.output].expect("output evaluated")
    }
}

fn compute_levels(gates: &[Gate]) -> Result<Vec<usize>, CircuitError> {
    // iterative DFS with three colours to reject cycles
    const UNSEEN: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;
    let mut state = vec![UNSEEN; gates.len()];
    let mut levels = vec![0_usize; gates.len()];
    for start in 0..gates.len() {
        if state[start] == DONE {
            continue;
        }
        let mut stack = vec![(start, 0_usize)];
        while let Some(&(idx, progress)) = stack.last() {
            if progress == 0 {
                if state[idx] == ACTIVE {
                    return Err(CircuitError::Cycle);
                }
                if state[idx] == DONE {
                    stack.pop();
                    continue;
                }
                state[idx] = ACTIVE;
            }
            if progress < gates[idx].inputs.len() {
                stack.last_mut().unwrap().1 += 1;
                let pred = gates[idx].inputs[progress];
                match state[pred] {
                    DONE => {}
                    ACTIVE => return Err(CircuitError::Cycle),
                    _ => stack.push((pred, 0)),
                }
            } else {
                state[idx] = DONE;
                levels[idx] = gates[idx]
                    .inputs
                    .iter()
                    .map(|&p| levels[p] + 1)
                    .max()
                    .unwrap_or(0);
                stack.pop();
            }
        }
    }
    Ok(levels)
}

/// Which slot of a layer's value vector a wire occupies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Input(usize),
    Gate(usize),
}

/// Compiles a circuit into a threshold network computing the same
/// function on 0/1 inputs.
///
/// Gate simulation: AND of arity a becomes threshold(Σxᵢ − a + ½), OR
/// becomes threshold(Σxᵢ − ½), and NOT becomes threshold(−x + ½). Values
/// still needed at deeper levels ride along through identity wires
/// (weight 1, bias −½). The network has one linear/threshold stage per
/// gate level, so its layer count including the input layer equals the
/// circuit depth.
pub fn circuit_to_mlp(circuit: &BooleanCircuit) -> Result<NeuralNetwork, LearnerError> {
    let arity = circuit.input_arity();
    let output_level = circuit.levels[circuit.output];

    // wires available after stage `t`
    let slots_at = |t: usize| -> Vec<Slot> {
        let mut slots: Vec<Slot> = (0..arity).map(Slot::Input).collect();
        slots.extend(
            circuit
                .gates
                .iter()
                .enumerate()
                .filter(|(i, g)| g.kind != GateKind::Input && circuit.levels[*i] <= t)
                .map(|(i, _)| Slot::Gate(i)),
        );
        slots
    };

    // a gate predecessor is either an input gate (an Input slot) or an
    // interior gate (a Gate slot)
    let slot_for = |gate_idx: usize| -> Slot {
        if circuit.gates[gate_idx].kind == GateKind::Input {
            let j = circuit
                .input_gates
                .iter()
                .position(|&g| g == gate_idx)
                .expect("input gate indexed");
            Slot::Input(j)
        } else {
            Slot::Gate(gate_idx)
        }
    };

    let mut layers = Vec::new();
    let stages = output_level.max(1);
    for t in 1..=stages {
        let prev = slots_at(t - 1);
        let position = |slot: Slot| prev.iter().position(|&s| s == slot).expect("wire present");
        let out_slots: Vec<Slot> = if t == output_level || output_level == 0 {
            vec![slot_for(circuit.output)]
        } else {
            slots_at(t)
        };
        let mut weights = Matrix::zeros(out_slots.len(), prev.len());
        let mut bias = vec![0.0; out_slots.len()];
        for (row, &slot) in out_slots.iter().enumerate() {
            let is_new_gate = match slot {
                Slot::Gate(g) => circuit.levels[g] == t,
                Slot::Input(_) => false,
            };
            if !is_new_gate {
                // identity wire: threshold(x − ½) = x on {0, 1}
                weights.set(row, position(slot), 1.0);
                bias[row] = -0.5;
                continue;
            }
            let Slot::Gate(g) = slot else { unreachable!() };
            let gate = &circuit.gates[g];
            match gate.kind {
                GateKind::And => {
                    for &p in &gate.inputs {
                        weights.add_at(row, position(slot_for(p)), 1.0);
                    }
                    bias[row] = 0.5 - gate.inputs.len() as f64;
                }
                GateKind::Or => {
                    for &p in &gate.inputs {
                        weights.add_at(row, position(slot_for(p)), 1.0);
                    }
                    bias[row] = -0.5;
                }
                GateKind::Not => {
                    weights.add_at(row, position(slot_for(gate.inputs[0])), -1.0);
                    bias[row] = 0.5;
                }
                GateKind::Input => unreachable!("input gates are never new"),
            }
        }
        layers.push(Layer::Linear { weights, bias });
        layers.push(Layer::Activation(ActivationKind::Threshold));
        if t == output_level || output_level == 0 {
            break;
        }
    }
    NeuralNetwork::new(Shape::Vector(arity), layers, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::net::Value;

    fn net_eval(net: &NeuralNetwork, inputs: &[bool]) -> bool {
        let x: Vec<f64> = inputs.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let out = net.forward(&Value::Vector(x)).unwrap();
        assert_eq!(out.len(), 1);
        out[0] > 0.5
    }

    fn assert_truth_table_match(circuit: &BooleanCircuit) {
        let net = circuit_to_mlp(circuit).unwrap();
        let arity = circuit.input_arity();
        for assignment in 0..(1_u32 << arity) {
            let inputs: Vec<bool> = (0..arity).map(|j| assignment >> j & 1 == 1).collect();
            assert_eq!(
                net_eval(&net, &inputs),
                circuit.evaluate(&inputs),
                "inputs {inputs:?}"
            );
        }
    }

    #[test]
    fn single_not_gate() {
        let circuit = BooleanCircuit::new(vec![Gate::input(), Gate::not(0)], 1).unwrap();
        assert_eq!(circuit.depth(), 2);
        let net = circuit_to_mlp(&circuit).unwrap();
        assert!(net_eval(&net, &[false]));
        assert!(!net_eval(&net, &[true]));
    }

    #[test]
    fn two_input_and() {
        let circuit =
            BooleanCircuit::new(vec![Gate::input(), Gate::input(), Gate::and(vec![0, 1])], 2)
                .unwrap();
        assert_truth_table_match(&circuit);
    }

    #[test]
    fn and_or_not_composite() {
        // (x1 AND x2) OR NOT x3
        let circuit = BooleanCircuit::new(
            vec![
                Gate::input(),
                Gate::input(),
                Gate::input(),
                Gate::and(vec![0, 1]),
                Gate::not(2),
                Gate::or(vec![3, 4]),
            ],
            5,
        )
        .unwrap();
        assert_eq!(circuit.depth(), 3);
        assert_truth_table_match(&circuit);
    }

    #[test]
    fn skip_level_wire_rides_through() {
        // x1 OR (x2 AND NOT x3): x1 must survive two levels untouched
        let circuit = BooleanCircuit::new(
            vec![
                Gate::input(),
                Gate::input(),
                Gate::input(),
                Gate::not(2),
                Gate::and(vec![1, 3]),
                Gate::or(vec![0, 4]),
            ],
            5,
        )
        .unwrap();
        assert_eq!(circuit.depth(), 4);
        assert_truth_table_match(&circuit);
    }

    #[test]
    fn duplicate_predecessors_accumulate() {
        let circuit = BooleanCircuit::new(vec![Gate::input(), Gate::and(vec![0, 0])], 1).unwrap();
        assert_truth_table_match(&circuit);
    }

    #[test]
    fn network_depth_matches_circuit_depth() {
        let circuit = BooleanCircuit::new(
            vec![
                Gate::input(),
                Gate::input(),
                Gate::input(),
                Gate::and(vec![0, 1]),
                Gate::not(2),
                Gate::or(vec![3, 4]),
            ],
            5,
        )
        .unwrap();
        let net = circuit_to_mlp(&circuit).unwrap();
        let threshold_stages = net
            .layers()
            .iter()
            .filter(|l| matches!(l, Layer::Activation(ActivationKind::Threshold)))
            .count();
        assert_eq!(threshold_stages + 1, circuit.depth());
    }

    #[test]
    fn cycle_rejected() {
        let result =
            BooleanCircuit::new(vec![Gate::input(), Gate::or(vec![2]), Gate::or(vec![1])], 1);
        assert_eq!(result.unwrap_err(), CircuitError::Cycle);
    }

    #[test]
    fn dangling_gate_rejected() {
        let result = BooleanCircuit::new(vec![Gate::input(), Gate::and(vec![])], 1);
        assert_eq!(result.unwrap_err(), CircuitError::DanglingGate { gate: 1 });
    }

    #[test]
    fn invalid_reference_rejected() {
        let result = BooleanCircuit::new(vec![Gate::input(), Gate::not(7)], 1);
        assert_eq!(
            result.unwrap_err(),
            CircuitError::InvalidReference {
                gate: 1,
                reference: 7
            }
        );
    }

    #[test]
    fn output_must_exist() {
        let result = BooleanCircuit::new(vec![Gate::input()], 3);
        assert_eq!(
            result.unwrap_err(),
            CircuitError::OutputOutOfRange { output: 3 }
        );
    }
}
