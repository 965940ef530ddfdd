use qroute::qsearch::*;
use num_complex::{Complex64, ComplexFloat};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn state(partitions: Vec<Vec<Vec<u64>>>, width: u8, target: u64) -> SearchState {
    let inst = SearchInstance::new(partitions, width);
    SearchState::init(StateLayout::plan(&inst, target, LayoutPolicy::Full, 22).unwrap())
}

#[test]
fn two_entry_product_state() {
    // Labels {0,1}, entry 0 holds {|1>} on one qubit, entry 1 holds {|0>}.
    let s = state(vec![vec![vec![1]], vec![vec![0]]], 1, 1);
    assert_eq!(s.layout.qubits(), 4);
    let mut expected = vec![c(0.0); 16];
    // bit0 label, bit1 register(entry 0), bit2 register(entry 1), bit3 ancilla
    for label in 0..2usize {
        let idx = label | 1 << 1;
        expected[idx] = c(0.5);
        expected[idx | 1 << 3] = c(-0.5);
    }
    for (a, b) in s.amplitudes.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn uniform_labels_at_half() {
    let s = state(vec![vec![vec![0]]; 4], 1, 1);
    let d = s.label_distribution();
    assert!(d.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    assert!((s.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn absent_target_oracle_is_identity() {
    let mut s = state(vec![vec![vec![0, 1]], vec![vec![2]]], 2, 3);
    let before = s.clone();
    s.apply_oracle(3);
    assert_eq!(s, before);
}

#[test]
fn single_hit_with_full_alpha_negates_one_branch() {
    let mut s = state(vec![vec![vec![1]], vec![vec![0]]], 1, 1);
    let before = s.clone();
    s.apply_oracle(1);
    for (idx, (a, b)) in s.amplitudes.iter().zip(&before.amplitudes).enumerate() {
        let expect = if idx & 1 == 0 { -*b } else { *b };
        assert!((a - expect).abs() < 1e-12, "index {idx}");
    }
}

#[test]
fn mixed_partition_matches_branch_decomposition() {
    // n_T = 4, entry 0 holds {|1>,|2>} (alpha 1/2 for target 2).
    let target = 2;
    let parts = vec![vec![vec![1, 2]], vec![vec![0]], vec![vec![3]], vec![vec![0]]];
    let mut s = state(parts, 2, target);
    let before = s.clone();
    s.apply_oracle(target);
    let reg = &s.layout.registers[0];
    let (alpha, n_t) = (0.5f64, 4.0f64);
    for (idx, a) in s.amplitudes.iter().enumerate() {
        let label = idx & 3;
        let value = (idx >> reg.offset) & 3;
        let ancilla_sign = if idx >> s.layout.ancilla & 1 == 1 { -1.0 } else { 1.0 };
        if before.amplitudes[idx].abs() < 1e-15 {
            assert!(a.abs() < 1e-15);
            continue;
        }
        if label != 0 {
            assert!((a - before.amplitudes[idx]).abs() < 1e-12);
            continue;
        }
        // label 0: sqrt((1-alpha)/n_T)|v_perp> - sqrt(alpha/n_T)|v_d>, times |->.
        let expect = if value as u64 == target { -(alpha / n_t).sqrt() } else { ((1.0 - alpha) / n_t).sqrt() };
        assert!((a.re - expect * ancilla_sign * std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12, "index {idx}");
    }
}

#[test]
fn gate_oracle_equals_phase_oracle() {
    let parts = vec![vec![vec![1, 2], vec![3]], vec![vec![2]], vec![vec![0, 1, 2]]];
    for target in 0..4 {
        let mut a = state(parts.clone(), 2, target);
        let mut b = a.clone();
        a.apply_oracle(target);
        b.apply_phase_oracle(target);
        for (x, y) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn diffusion_examples() {
    let mut s = state(vec![vec![vec![0]]; 4], 1, 1);
    let before = s.clone();
    s.apply_diffusion();
    for (x, y) in s.amplitudes.iter().zip(&before.amplitudes) {
        assert!((x - y).abs() < 1e-12);
    }
    // Label amplitudes (0.5, 0.5, -0.5, 0.5) become (0, 0, 1, 0).
    let mut s = before.clone();
    for (idx, a) in s.amplitudes.iter_mut().enumerate() {
        if idx & 3 == 2 {
            *a = -*a;
        }
    }
    s.apply_diffusion();
    let d = s.label_distribution();
    assert!((d[2] - 1.0).abs() < 1e-12);
    assert!((s.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn non_power_of_two_labels_stay_in_range() {
    let mut s = state(vec![vec![vec![0]], vec![vec![1]], vec![vec![2]]], 2, 1);
    for _ in 0..3 {
        s.apply_oracle(1);
        s.apply_diffusion();
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert!((s.label_distribution().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn fidelity_of_untouched_registers() {
    let mut s = state(vec![vec![vec![1, 2]], vec![vec![0, 3]]], 2, 2);
    s.apply_oracle(2);
    s.apply_diffusion();
    assert!((s.register_fidelity(1) - 1.0).abs() < 1e-12);
    assert!(s.register_fidelity(0) < 1.0 - 1e-6);
}

#[test]
fn cap_is_enforced() {
    let inst = SearchInstance::new(vec![vec![vec![1], vec![2]]; 4], 3);
    assert_eq!(
        StateLayout::plan(&inst, 1, LayoutPolicy::Full, 16),
        Err(QsearchError::DimensionCapExceeded { required: 2 + 8 * 3 + 1, cap: 16 })
    );
    let reduced = StateLayout::plan(&inst, 1, LayoutPolicy::Auto, 16).unwrap();
    assert!(reduced.reduced);
    assert_eq!(reduced.registers.len(), 4);
    assert!(StateLayout::plan(&inst, 1, LayoutPolicy::Reduced, 14).is_err());
}
