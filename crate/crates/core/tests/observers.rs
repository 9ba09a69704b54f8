//! Simulated observers driven through whole sessions.

use mglyph_core::clock::SteppingClock;
use mglyph_core::metrics::Bootstrap;
use mglyph_core::observer::{run_session, Observer, ObserverModel, SimulationResult};
use mglyph_core::staircase::{SessionGlyph, StaircaseConfig};

fn session(model: ObserverModel, seed: u64) -> SimulationResult {
    let mut obs = Observer::new(model).unwrap();
    let config = StaircaseConfig {
        rng_seed: seed,
        ..Default::default()
    };
    run_session(
        "obs",
        vec![SessionGlyph::continuous("g")],
        &mut obs,
        config,
        &SteppingClock::epoch(),
        Bootstrap::default(),
    )
    .unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    (v[(v.len() - 1) / 2] + v[v.len() / 2]) / 2.0
}

#[test]
fn random_observer_resolution_tracks_visit_depth() {
    // With A = 1/3 on levels 0..=L and 0 beyond, the trapezoid sum gives
    // R = (100/d0) * gamma^(-(L + 1/2)/3). Depth, not accuracy, lifts R above 100/d0.
    let ratios: Vec<f64> = (0..20u64)
        .map(|s| {
            let r = session(ObserverModel::random(40 + s), 70 + s);
            let score = &r.scores[0];
            let depth = score.curve.last().unwrap().t as f64;
            let predicted = 5.0 * 0.7f64.powf(-(depth + 0.5) / 3.0);
            assert!(score.resolution >= 5.0);
            score.resolution / predicted
        })
        .collect();
    let m = median(ratios);
    assert!((0.7..=1.3).contains(&m), "median R / predicted = {m}");
}

#[test]
fn smaller_sigma_never_scores_lower() {
    let mut inversions = 0;
    for rep in 0..20u64 {
        let r: Vec<f64> = [1.0, 3.0, 9.0]
            .iter()
            .map(|&sigma| session(ObserverModel::noisy(sigma, 1.0, 900 + rep), 500 + rep).scores[0].resolution)
            .collect();
        inversions += r.windows(2).filter(|w| w[0] < w[1]).count();
    }
    assert!(inversions <= 1, "{inversions} inversions");
}

#[test]
fn weber_accuracy_falls_with_centre() {
    // t_max = 0 pins d at d0; bin the unequal trials by centre
    let mut obs = Observer::new(ObserverModel::weber(0.08, 0.5, 0.3, 6)).unwrap();
    let config = StaircaseConfig {
        trials_per_glyph: 48_000,
        d0: 5.0,
        t_max: 0,
        rng_seed: 6,
        ..Default::default()
    };
    let r = run_session(
        "w",
        vec![SessionGlyph::continuous("g")],
        &mut obs,
        config,
        &SteppingClock::epoch(),
        Bootstrap::default(),
    )
    .unwrap();
    let mut bins = [(0u32, 0u32); 3];
    for rec in r.records.iter().filter(|r| !r.is_equal) {
        let b = ((rec.c / 100.0 * 3.0) as usize).min(2);
        bins[b].0 += 1;
        bins[b].1 += rec.correct as u32;
    }
    let acc: Vec<f64> = bins.iter().map(|&(n, k)| k as f64 / n as f64).collect();
    assert!(bins.iter().all(|b| b.0 >= 5_000), "{bins:?}");
    assert!(acc[0] > acc[1] && acc[1] > acc[2], "{acc:?}");
}
