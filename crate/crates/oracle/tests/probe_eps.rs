use triphoton_core::correlators::CorrelationEvaluator;
use triphoton_core::grid::linspace;
use triphoton_core::wavefield::{LoopMode, NumericsConfig};
use triphoton_core::EnsembleParams;
use triphoton_oracle::qrt_g3_connected;

fn frobenius_eps(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

#[test]
fn eps_scan() {
    let n = 9;
    let grid = linspace(0.0, 5.0, n);
    for (p_in, loops) in [(1e-3, LoopMode::Off), (1e-3, LoopMode::Auto), (0.02, LoopMode::Auto), (0.02, LoopMode::Off)] {
        let params = EnsembleParams { beta: 0.05, num_atoms: 2, gamma_tot: 1.0, drive_power: p_in };
        let ev = CorrelationEvaluator::new(params, NumericsConfig::default(), loops).unwrap();
        let oracle = qrt_g3_connected(&params, &grid).unwrap();
        let diag = ev.time_grid(triphoton_core::GridKind::G3Connected, 5.0, n).unwrap();
        let eps = frobenius_eps(&diag.values, &oracle.values);
        println!(
            "P={p_in:6} loops={loops:?}: eps={eps:.4}  origin diag={:+.6e} oracle={:+.6e}",
            diag.values[0], oracle.values[0]
        );
    }
}
