//! Joint statevector of the label register, address registers and ancilla.
//!
//! Bit layout, least significant first: label bits, then each address
//! register in layout order, then the ancilla.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{QsearchError, SearchInstance};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutPolicy {
    /// Full layout when it fits the cap, reduced otherwise.
    #[default]
    Auto,
    /// One register per (entry, partition).
    Full,
    /// Only registers whose partition holds the target.
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub entry: usize,
    pub partition: usize,
    pub members: Vec<u64>,
    pub offset: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLayout {
    pub n_t: usize,
    pub label_bits: u32,
    pub address_width: u32,
    pub registers: Vec<RegisterLayout>,
    pub ancilla: u32,
    pub reduced: bool,
}

impl StateLayout {
    pub fn qubits(&self) -> u32 {
        self.ancilla + 1
    }

    /// Qubits a layout of `instance` needs.
    pub fn required_qubits(instance: &SearchInstance, target: u64, reduced: bool) -> u32 {
        let registers = instance
            .entries
            .iter()
            .flat_map(|e| &e.partitions)
            .filter(|p| !reduced || p.contains(&target))
            .count() as u32;
        instance.label_bits() + registers * u32::from(instance.address_width) + 1
    }

    pub fn plan(instance: &SearchInstance, target: u64, policy: LayoutPolicy, cap: u32) -> Result<Self, QsearchError> {
        instance.validate()?;
        let full = Self::required_qubits(instance, target, false);
        let reduced = match policy {
            LayoutPolicy::Full => false,
            LayoutPolicy::Reduced => true,
            LayoutPolicy::Auto => full > cap,
        };
        let required = Self::required_qubits(instance, target, reduced);
        if required > cap {
            return Err(QsearchError::DimensionCapExceeded { required, cap });
        }
        let label_bits = instance.label_bits();
        let width = u32::from(instance.address_width);
        let mut offset = label_bits;
        let mut registers = Vec::new();
        for (entry, e) in instance.entries.iter().enumerate() {
            for (partition, members) in e.partitions.iter().enumerate() {
                if reduced && !members.contains(&target) {
                    continue;
                }
                registers.push(RegisterLayout { entry, partition, members: members.clone(), offset });
                offset += width;
            }
        }
        Ok(Self { n_t: instance.n_t(), label_bits, address_width: width, registers, ancilla: offset, reduced })
    }
}

/// Exact joint statevector.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub layout: StateLayout,
    pub amplitudes: Vec<Complex64>,
}

impl SearchState {
    /// Uniform labels over the first `n_T` basis states, each register in its
    /// superposed address and the ancilla in `|->`.
    pub fn init(layout: StateLayout) -> Self {
        let mut support: Vec<(usize, f64)> =
            (0..layout.n_t).map(|y| (y, 1.0 / (layout.n_t as f64).sqrt())).collect();
        for reg in &layout.registers {
            let amp = 1.0 / (reg.members.len() as f64).sqrt();
            support = support
                .iter()
                .flat_map(|&(idx, a)| reg.members.iter().map(move |&m| (idx | (m as usize) << reg.offset, a * amp)))
                .collect();
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << layout.qubits()];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (idx, a) in support {
            amplitudes[idx] = Complex64::new(a * h, 0.0);
            amplitudes[idx | 1 << layout.ancilla] = Complex64::new(-a * h, 0.0);
        }
        Self { layout, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn pauli_x(&mut self, bit: u32) {
        let mask = 1usize << bit;
        for idx in 0..self.amplitudes.len() {
            if idx & mask == 0 {
                self.amplitudes.swap(idx, idx | mask);
            }
        }
    }

    /// Flips `target` wherever every bit in `controls` is set.
    pub fn multi_controlled_x(&mut self, controls: usize, target: u32) {
        let mask = 1usize << target;
        for idx in 0..self.amplitudes.len() {
            if idx & mask == 0 && idx & controls == controls {
                self.amplitudes.swap(idx, idx | mask);
            }
        }
    }

    /// Circuit form of the oracle: for each register, X-conjugate the label
    /// and register bits that are 0 in (entry label, target), then kick the
    /// `|->` ancilla with a multi-controlled X.
    pub fn apply_oracle(&mut self, target: u64) {
        let layout = self.layout.clone();
        let width = layout.address_width;
        for reg in &layout.registers {
            let mut flips = Vec::new();
            for b in 0..layout.label_bits {
                if reg.entry >> b & 1 == 0 {
                    flips.push(b);
                }
            }
            for b in 0..width {
                if target >> b & 1 == 0 {
                    flips.push(reg.offset + b);
                }
            }
            let controls = ((1usize << layout.label_bits) - 1) | (((1usize << width) - 1) << reg.offset);
            for &b in &flips {
                self.pauli_x(b);
            }
            self.multi_controlled_x(controls, layout.ancilla);
            for &b in &flips {
                self.pauli_x(b);
            }
        }
    }

    /// Direct form of the oracle: negate every component whose label names
    /// an entry with a register holding the target.
    pub fn apply_phase_oracle(&mut self, target: u64) {
        let label_mask = (1usize << self.layout.label_bits) - 1;
        let reg_mask = (1usize << self.layout.address_width) - 1;
        for (idx, amp) in self.amplitudes.iter_mut().enumerate() {
            let label = idx & label_mask;
            let flips = self
                .layout
                .registers
                .iter()
                .filter(|r| r.entry == label && (idx >> r.offset & reg_mask) as u64 == target)
                .count();
            if flips % 2 == 1 {
                *amp = -*amp;
            }
        }
    }

    /// Reflection about the uniform label state over the first `n_T` labels;
    /// identity on every other register.
    pub fn apply_diffusion(&mut self) {
        let bits = self.layout.label_bits;
        let n_t = self.layout.n_t;
        let block = 1usize << bits;
        for chunk in self.amplitudes.chunks_mut(block) {
            let mean = chunk[..n_t].iter().sum::<Complex64>() / n_t as f64;
            for a in &mut chunk[..n_t] {
                *a = mean * 2.0 - *a;
            }
            for a in &mut chunk[n_t..] {
                *a = -*a;
            }
        }
    }

    /// Probability of each label `0..n_T`.
    pub fn label_distribution(&self) -> Vec<f64> {
        let mask = (1usize << self.layout.label_bits) - 1;
        let mut dist = vec![0.0; 1usize << self.layout.label_bits];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            dist[idx & mask] += a.norm_sqr();
        }
        dist.truncate(self.layout.n_t);
        dist
    }

    /// Reduced density matrix of address register `r`.
    pub fn reduced_density(&self, r: usize) -> Vec<Vec<Complex64>> {
        let reg = &self.layout.registers[r];
        let dim = 1usize << self.layout.address_width;
        let mask = (dim - 1) << reg.offset;
        let mut rho = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for rest in (0..self.amplitudes.len()).filter(|idx| idx & mask == 0) {
            for m in 0..dim {
                let a = self.amplitudes[rest | m << reg.offset];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (mp, cell) in rho[m].iter_mut().enumerate() {
                    *cell += a * self.amplitudes[rest | mp << reg.offset].conj();
                }
            }
        }
        rho
    }

    /// `<psi|rho|psi>` for register `r` against its prepared superposition.
    pub fn register_fidelity(&self, r: usize) -> f64 {
        let reg = &self.layout.registers[r];
        let amp = 1.0 / (reg.members.len() as f64).sqrt();
        let rho = self.reduced_density(r);
        let mut f = Complex64::new(0.0, 0.0);
        for &a in &reg.members {
            for &b in &reg.members {
                f += rho[a as usize][b as usize] * amp * amp;
            }
        }
        f.re
    }
}
