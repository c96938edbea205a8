//! Binary convolutional codes over a shift register, recursive or
//! feedforward, with optional tail-bit termination.

use super::ClassicError;

/// Descriptor of a rate `1/N` convolutional code.
///
/// Generators are given in octal. For a recursive systematic code the
/// first polynomial is the feedback; output 0 is then the systematic
/// bit and the remaining generators produce parity streams. Polynomial
/// bit `L-1` (the MSB over constraint length `L`) weights the current
/// input, lower bits weight progressively older state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCode {
    generators: Vec<u64>,
    constraint_len: usize,
    recursive: bool,
    terminated: bool,
}

impl ConvCode {
    /// Recursive systematic code; `octal[0]` is the feedback polynomial.
    pub fn recursive_octal(octal: &[u64]) -> Result<Self, ClassicError> {
        Self::build(octal, true)
    }

    /// Feedforward code with one output per generator.
    pub fn feedforward_octal(octal: &[u64]) -> Result<Self, ClassicError> {
        Self::build(octal, false)
    }

    fn build(octal: &[u64], recursive: bool) -> Result<Self, ClassicError> {
        if octal.len() < 2 {
            return Err(ClassicError::InvalidCode(
                "need at least two generator polynomials".into(),
            ));
        }
        let generators: Vec<u64> = octal
            .iter()
            .map(|&o| parse_octal(o))
            .collect::<Result<_, _>>()?;
        let constraint_len = 64 - generators[0].leading_zeros() as usize;
        if constraint_len < 2 {
            return Err(ClassicError::InvalidCode(format!(
                "first generator {:o} has no memory",
                octal[0]
            )));
        }
        for (i, &g) in generators.iter().enumerate() {
            if g == 0 || g >= (1 << constraint_len) {
                return Err(ClassicError::InvalidCode(format!(
                    "generator {:o} outside [1, 2^{constraint_len})",
                    octal[i]
                )));
            }
        }
        Ok(Self {
            generators,
            constraint_len,
            recursive,
            terminated: true,
        })
    }

    pub fn with_termination(mut self, terminated: bool) -> Self {
        self.terminated = terminated;
        self
    }

    /// Memory length `m` (number of state bits).
    pub fn memory(&self) -> usize {
        self.constraint_len - 1
    }

    pub fn num_states(&self) -> usize {
        1 << self.memory()
    }

    /// Coded bits emitted per input bit.
    pub fn outputs_per_step(&self) -> usize {
        self.generators.len()
    }

    pub fn is_recursive(&self) -> bool {
        self.recursive
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated
    }

    /// Tail steps appended when terminated, zero otherwise.
    pub fn tail_steps(&self) -> usize {
        if self.terminated {
            self.memory()
        } else {
            0
        }
    }

    /// Total coded bits for a `k`-bit message.
    pub fn coded_len(&self, k: usize) -> usize {
        (k + self.tail_steps()) * self.outputs_per_step()
    }

    /// The register window value entering the state for a given input.
    fn window(&self, state: usize, input: u8) -> u8 {
        if self.recursive {
            let aug = ((input as u64) << self.memory()) | state as u64;
            parity(aug & self.generators[0])
        } else {
            input
        }
    }

    /// Output bits and next state for one transition.
    pub fn step(&self, state: usize, input: u8) -> (u32, usize) {
        let w = self.window(state, input);
        let aug = ((w as u64) << self.memory()) | state as u64;
        let mut out = 0u32;
        for (j, &g) in self.generators.iter().enumerate() {
            if self.recursive && j == 0 {
                out |= (input as u32) << j;
            } else {
                out |= (parity(aug & g) as u32) << j;
            }
        }
        (out, (aug >> 1) as usize)
    }

    /// Input bit that drives the register toward zero from `state`.
    pub fn tail_input(&self, state: usize) -> u8 {
        if self.recursive {
            let mask = (1u64 << self.memory()) - 1;
            parity(state as u64 & self.generators[0] & mask)
        } else {
            0
        }
    }

    /// Encodes a message, appending tail steps when terminated. Output
    /// bits are interleaved per step in generator order.
    pub fn encode(&self, bits: &[u8]) -> Vec<u8> {
        let n = self.outputs_per_step();
        let mut out = Vec::with_capacity(self.coded_len(bits.len()));
        let mut state = 0usize;
        for &b in bits {
            let (o, next) = self.step(state, b & 1);
            for j in 0..n {
                out.push(((o >> j) & 1) as u8);
            }
            state = next;
        }
        for _ in 0..self.tail_steps() {
            let tb = self.tail_input(state);
            let (o, next) = self.step(state, tb);
            for j in 0..n {
                out.push(((o >> j) & 1) as u8);
            }
            state = next;
        }
        debug_assert!(!self.terminated || state == 0);
        out
    }

    /// Encodes and also returns the tail input bits used for termination.
    pub fn encode_with_tail(&self, bits: &[u8]) -> (Vec<u8>, Vec<u8>) {
        let n = self.outputs_per_step();
        let coded = self.encode(bits);
        let mut tail_inputs = Vec::with_capacity(self.tail_steps());
        if self.terminated {
            let mut state = 0usize;
            for &b in bits {
                state = self.step(state, b & 1).1;
            }
            for _ in 0..self.tail_steps() {
                let tb = self.tail_input(state);
                tail_inputs.push(tb);
                state = self.step(state, tb).1;
            }
        }
        let _ = n;
        (coded, tail_inputs)
    }
}

fn parse_octal(o: u64) -> Result<u64, ClassicError> {
    let mut value = 0u64;
    let mut shift = 0;
    let mut rest = o;
    loop {
        let digit = rest % 10;
        if digit > 7 {
            return Err(ClassicError::InvalidCode(format!(
                "{o} is not a valid octal literal"
            )));
        }
        value |= digit << shift;
        rest /= 10;
        shift += 3;
        if rest == 0 {
            break;
        }
    }
    Ok(value)
}

pub(crate) fn parity(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook shift-register encoder, independent of the state-index
    /// tables used by `ConvCode::step`.
    fn shift_register_encode(gens_octal: &[u64], recursive: bool, bits: &[u8]) -> Vec<u8> {
        let gens: Vec<u64> = gens_octal.iter().map(|&o| parse_octal(o).unwrap()).collect();
        let l = 64 - gens[0].leading_zeros() as usize;
        let m = l - 1;
        let mut reg = vec![0u8; m]; // reg[0] newest
        let mut out = Vec::new();
        let taps = |g: u64, w: u8, reg: &[u8]| -> u8 {
            let mut acc = if (g >> m) & 1 == 1 { w } else { 0 };
            for (i, &r) in reg.iter().enumerate() {
                if (g >> (m - 1 - i)) & 1 == 1 {
                    acc ^= r;
                }
            }
            acc
        };
        let mut push_step = |input: u8, reg: &mut Vec<u8>| {
            let w = if recursive {
                input ^ taps(gens[0], 0, reg)
            } else {
                input
            };
            for (j, &g) in gens.iter().enumerate() {
                if recursive && j == 0 {
                    out.push(input);
                } else {
                    out.push(taps(g, w, reg));
                }
            }
            reg.insert(0, w);
            reg.pop();
        };
        for &b in bits {
            push_step(b, &mut reg);
        }
        for _ in 0..m {
            let tail = if recursive {
                taps(gens[0], 0, &reg)
            } else {
                0
            };
            push_step(tail, &mut reg);
        }
        out
    }

    #[test]
    fn all_zero_message_encodes_to_zero() {
        for code in [
            ConvCode::recursive_octal(&[13, 15]).unwrap(),
            ConvCode::feedforward_octal(&[7, 5]).unwrap(),
        ] {
            let out = code.encode(&[0; 20]);
            assert!(out.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn impulse_response_matches_shift_register_oracle() {
        for (gens, recursive) in [
            (vec![13u64, 15], true),
            (vec![7, 5], false),
            (vec![13, 15, 17], false),
        ] {
            let code = if recursive {
                ConvCode::recursive_octal(&gens).unwrap()
            } else {
                ConvCode::feedforward_octal(&gens).unwrap()
            };
            for pos in 0..8 {
                let mut msg = vec![0u8; 8];
                msg[pos] = 1;
                assert_eq!(
                    code.encode(&msg),
                    shift_register_encode(&gens, recursive, &msg),
                    "impulse at {pos} for {gens:?}"
                );
            }
        }
    }

    #[test]
    fn encoder_is_gf2_linear() {
        let code = ConvCode::recursive_octal(&[13, 15]).unwrap();
        let mut rng = crate::channel::SeededRng::new(12, "gf2");
        for _ in 0..50 {
            let a: Vec<u8> = (0..16).map(|_| rng.next_bit()).collect();
            let b: Vec<u8> = (0..16).map(|_| rng.next_bit()).collect();
            let xor: Vec<u8> = a.iter().zip(&b).map(|(x, y)| x ^ y).collect();
            let ea = code.encode(&a);
            let eb = code.encode(&b);
            let exor = code.encode(&xor);
            for i in 0..ea.len() {
                assert_eq!(exor[i], ea[i] ^ eb[i]);
            }
        }
    }

    #[test]
    fn systematic_output_reproduces_message() {
        let code = ConvCode::recursive_octal(&[13, 15]).unwrap();
        let mut rng = crate::channel::SeededRng::new(13, "sys");
        let msg: Vec<u8> = (0..32).map(|_| rng.next_bit()).collect();
        let coded = code.encode(&msg);
        for (t, &b) in msg.iter().enumerate() {
            assert_eq!(coded[2 * t], b);
        }
    }

    #[test]
    fn termination_reaches_zero_state() {
        let code = ConvCode::recursive_octal(&[13, 15]).unwrap();
        let mut rng = crate::channel::SeededRng::new(14, "term");
        for _ in 0..20 {
            let msg: Vec<u8> = (0..12).map(|_| rng.next_bit()).collect();
            let mut state = 0usize;
            for &b in &msg {
                state = code.step(state, b).1;
            }
            for _ in 0..code.tail_steps() {
                let tb = code.tail_input(state);
                state = code.step(state, tb).1;
            }
            assert_eq!(state, 0);
        }
    }

    #[test]
    fn invalid_generators_rejected() {
        assert!(ConvCode::recursive_octal(&[13]).is_err());
        assert!(ConvCode::recursive_octal(&[13, 0]).is_err());
        assert!(ConvCode::recursive_octal(&[13, 99]).is_err());
        assert!(ConvCode::recursive_octal(&[13, 37]).is_err());
    }
}
