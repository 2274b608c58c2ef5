use glam::DVec2;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use plc_nav::behavior::BehaviorMode;
use plc_nav::harness::{build_scenario, ScenarioConfig, ScenarioKind, Turn};
use plc_nav::perception::{bayes_step, presence_observed, sense, BayesParams, Belief, Detection, SensorModel};
use plc_nav::world::{parse_map, OccupancyGrid, Pose2};

fn corridor() -> OccupancyGrid {
    let (w, h) = (602, 42);
    let mut text = String::new();
    for row in 0..h {
        for col in 0..w {
            text.push(if row == 0 || row == h - 1 || col == 0 || col == w - 1 { '#' } else { '.' });
        }
        text.push('\n');
    }
    parse_map(&text, 0.05).unwrap().with_origin(DVec2::splat(-0.05))
}

fn exact_sensor() -> SensorModel {
    SensorModel {
        p_detect: 1.0,
        p_false_positive_per_tick: 0.0,
        position_noise_sigma: 0.0,
        ..SensorModel::default()
    }
}

/// Prediction then Bayes rule, written out on probabilities.
fn hand_posterior(b: f64, observed: bool, p: &BayesParams) -> f64 {
    let pred = p.persistence * b + (1.0 - p.persistence) * (1.0 - b);
    let (l1, l0) = if observed { (p.p_hit, p.p_miss_false) } else { (1.0 - p.p_hit, 1.0 - p.p_miss_false) };
    l1 * pred / (l1 * pred + l0 * (1.0 - pred))
}

#[test]
fn person_out_of_range_is_never_seen() {
    let g = corridor();
    let robot = Pose2::new(1.0, 1.0, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 0..200 {
        assert!(sense(&robot, &[DVec2::new(21.0, 1.0)], &g, &exact_sensor(), t, &mut rng).is_empty());
    }
}

#[test]
fn person_behind_the_corner_is_never_seen() {
    let cfg = ScenarioConfig::new(ScenarioKind::Blind, Some(Turn::Ab), BehaviorMode::Plc, 0);
    let sc = build_scenario(&cfg, None).unwrap();
    let robot = sc.robot_start;
    // halfway down the walker's first leg, in range but around the corner
    let hidden = sc.human_route[0].lerp(sc.human_route[1], 0.5);
    assert!(robot.position().distance(hidden) < 10.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for t in 0..200 {
        assert!(sense(&robot, &[hidden], &sc.grid, &exact_sensor(), t, &mut rng).is_empty());
    }
}

#[test]
fn exact_sensor_reports_true_position() {
    let g = corridor();
    let robot = Pose2::new(1.0, 1.0, 0.0);
    let person = DVec2::new(7.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for t in 0..100 {
        let d = sense(&robot, &[person], &g, &exact_sensor(), t, &mut rng);
        assert_eq!(d, vec![Detection { position: person, tick: t }]);
    }
}

#[test]
fn seeded_sensing_is_reproducible() {
    let g = corridor();
    let robot = Pose2::new(1.0, 1.0, 0.0);
    let model = SensorModel { p_false_positive_per_tick: 0.3, ..SensorModel::default() };
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..300)
            .map(|t| sense(&robot, &[DVec2::new(5.0 + 0.01 * t as f64, 1.2)], &g, &model, t, &mut rng))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn bayes_hand_examples() {
    let p = BayesParams { persistence: 1.0, p_hit: 0.9, p_miss_false: 0.05, ..BayesParams::default() };
    let post = bayes_step(Belief::new(0.5), true, &p).probability();
    assert!((post - 0.45 / 0.475).abs() < 1e-12);
    assert!((post - 0.9474).abs() < 5e-5);

    let p = BayesParams { p_hit: 0.3, p_miss_false: 0.3, ..BayesParams::default() };
    for obs in [true, false] {
        let b = 0.37;
        let pred = p.persistence * b + (1.0 - p.persistence) * (1.0 - b);
        assert!((bayes_step(Belief::from_probability(b, false), obs, &p).probability() - pred).abs() < 1e-12);
    }
}

#[test]
fn single_miss_keeps_gate_on() {
    for p_hit in [0.85, BayesParams::default().p_hit] {
        let p = BayesParams { p_hit, ..BayesParams::default() };
        let next = bayes_step(Belief::from_probability(0.95, true), false, &p);
        let want = hand_posterior(0.95, false, &p);
        assert!((next.probability() - want).abs() < 1e-12);
        assert!(want > p.eps_off);
        assert!(next.gate_on);
    }
    // with p_hit = 0.85 the single-miss posterior is 0.677
    let p = BayesParams { p_hit: 0.85, ..BayesParams::default() };
    assert!((hand_posterior(0.95, false, &p) - 0.677).abs() < 1e-3);
}

#[test]
fn ahead_sector_defines_the_observation() {
    let robot = Pose2::new(0.0, 0.0, 0.0);
    let det = |x: f64, y: f64| vec![Detection { position: DVec2::new(x, y), tick: 0 }];
    assert!(presence_observed(&robot, &det(7.9, 0.0), 8.0));
    assert!(!presence_observed(&robot, &det(8.1, 0.0), 8.0));
    assert!(presence_observed(&robot, &det(1.0, 1.7), 8.0));
    assert!(!presence_observed(&robot, &det(1.0, 1.8), 8.0));
    assert!(!presence_observed(&robot, &det(-2.0, 0.0), 8.0));
}

#[test]
fn invalid_parameters_rejected() {
    assert!(BayesParams { eps_on: 0.2, eps_off: 0.8, ..BayesParams::default() }.validate().is_err());
    assert!(BayesParams { p_hit: 1.0, ..BayesParams::default() }.validate().is_err());
    assert!(SensorModel { p_detect: 1.5, ..SensorModel::default() }.validate().is_err());
}

fn params() -> impl Strategy<Value = BayesParams> {
    (0.5f64..1.0, 0.01f64..0.99, 0.01f64..0.99, 0.55f64..0.95, 0.05f64..0.45).prop_map(|(pers, a, b, on, off)| {
        let (p_hit, p_miss_false) = if a > b { (a, b) } else { (b, a) };
        BayesParams {
            persistence: pers,
            p_hit: p_hit.max(p_miss_false + 1e-3).min(0.999),
            p_miss_false,
            eps_on: on,
            eps_off: off,
            ..BayesParams::default()
        }
    })
}

proptest! {
    #[test]
    fn posterior_stays_in_open_interval(p in params(), obs in proptest::collection::vec(any::<bool>(), 1..400)) {
        let mut b = Belief::new(p.prior);
        for o in obs {
            b = bayes_step(b, o, &p);
            prop_assert!(b.log_odds.is_finite());
            let q = b.probability();
            prop_assert!(q > 0.0 && q < 1.0);
        }
    }

    #[test]
    fn repeated_observations_from_prior_are_monotone(p in params(), obs in any::<bool>()) {
        let mut b = Belief::new(0.5);
        for _ in 0..100 {
            let next = bayes_step(b, obs, &p);
            if obs {
                prop_assert!(next.probability() >= b.probability() - 1e-12);
            } else {
                prop_assert!(next.probability() <= b.probability() + 1e-12);
            }
            b = next;
        }
    }

    #[test]
    fn repeated_observations_never_reverse(p in params(), start in 0.01f64..0.99, obs in any::<bool>()) {
        // from any start the belief moves monotonically toward its fixed point
        let mut prev = Belief::from_probability(start, false);
        let mut b = bayes_step(prev, obs, &p);
        let up = b.probability() >= prev.probability();
        for _ in 0..100 {
            prev = b;
            b = bayes_step(b, obs, &p);
            let d = b.probability() - prev.probability();
            let ok = if up { d >= -1e-12 } else { d <= 1e-12 };
            prop_assert!(ok);
        }
    }

    #[test]
    fn gate_flips_need_band_crossings(p in params(), obs in proptest::collection::vec(any::<bool>(), 1..400)) {
        let mut b = Belief::new(p.prior);
        let mut flips = 0;
        let mut crossings = 0;
        // side of the band last touched: +1 above eps_on, -1 below eps_off
        let mut side = 0i32;
        for o in obs {
            let next = bayes_step(b, o, &p);
            if next.gate_on != b.gate_on {
                flips += 1;
            }
            let q = next.probability();
            let s = if q >= p.eps_on { 1 } else if q <= p.eps_off { -1 } else { 0 };
            if s != 0 && s != side {
                if side != 0 || s == 1 {
                    crossings += 1;
                }
                side = s;
            }
            b = next;
        }
        prop_assert!(flips <= crossings);
    }
}
