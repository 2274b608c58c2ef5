use glam::DVec2;
use proptest::prelude::*;

use plc_nav::pedestrian::{step_human, HumanParams, HumanState};
use plc_nav::world::{parse_map, Footprint, OccupancyGrid, Pose2};

const DT: f64 = 0.05;

fn corridor() -> OccupancyGrid {
    let (w, h) = (402, 42);
    let mut text = String::new();
    for row in 0..h {
        for col in 0..w {
            text.push(if row == 0 || row == h - 1 || col == 0 || col == w - 1 { '#' } else { '.' });
        }
        text.push('\n');
    }
    parse_map(&text, 0.05).unwrap().with_origin(DVec2::splat(-0.05))
}

fn route() -> Vec<DVec2> {
    vec![DVec2::new(2.5, 1.0), DVec2::new(17.5, 1.0)]
}

fn walk(grid: &OccupancyGrid, robot: Option<Pose2>, secs: f64) -> Vec<HumanState> {
    let p = HumanParams::default();
    let mut h = HumanState::new(route(), p.preferred_speed);
    let mut out = vec![h.clone()];
    for _ in 0..(secs / DT).round() as usize {
        h = step_human(&h, robot.as_ref(), &Footprint::default(), grid, DT, &p);
        out.push(h.clone());
    }
    out
}

fn finish_time(log: &[HumanState]) -> Option<f64> {
    log.iter().position(|h| h.finished).map(|k| k as f64 * DT)
}

#[test]
fn free_corridor_route_takes_twelve_seconds() {
    let log = walk(&corridor(), None, 14.0);
    let t = finish_time(&log).unwrap();
    assert!((t - 15.0 / 1.25).abs() <= DT + 1e-9, "{t}");
}

#[test]
fn walker_passes_robot_holding_the_lane_line() {
    let g = corridor();
    let fp = Footprint::default();
    let p = HumanParams::default();
    // geometry: the free gap beside the robot is wider than the minimum walking gap
    let gap = 2.0 - 0.45 - fp.half_width();
    assert!((gap - 1.225).abs() < 1e-12);
    assert!(gap >= p.stop_gap_min);
    let robot = Pose2::new(10.0, 0.45, std::f64::consts::PI);
    let log = walk(&g, Some(robot), 14.0);
    let t = finish_time(&log).unwrap();
    let min = log.iter().map(|h| fp.distance_to(&robot, h.position)).fold(f64::INFINITY, f64::min);
    assert!(min >= p.lateral_clearance_min - 1e-6, "{min}");
    // never slows down: total speed stays at the preferred value
    assert!(log[1..].iter().take_while(|h| !h.finished).all(|h| (h.speed() - p.preferred_speed).abs() < 1e-9));
    assert!((t - 12.0).abs() <= 2.0 * DT, "{t}");
    // lateral offset toward the free side
    assert!(log.iter().any(|h| h.position.y > 1.0 + 0.1));
}

#[test]
fn walker_waits_at_a_narrow_gap() {
    let g = corridor();
    // robot across the corridor leaves 0.5 m on one side
    let robot = Pose2::new(10.0, 0.5 + 0.565, std::f64::consts::FRAC_PI_2);
    let log = walk(&g, Some(robot), 20.0);
    assert!(finish_time(&log).is_none());
    let tail = &log[log.len() - 40..];
    assert!(tail.iter().all(|h| h.forward_speed == 0.0 && h.speed() < 1e-9));
}

#[test]
fn walker_squeezes_past_a_centered_robot_after_waiting() {
    let g = corridor();
    let fp = Footprint::default();
    let p = HumanParams::default();
    // centered robot leaves 0.675 m per side: under the comfortable gap,
    // over the squeeze gap
    let robot = Pose2::new(10.0, 1.0, std::f64::consts::PI);
    let side_gap = 1.0 - fp.half_width();
    assert!(side_gap < p.stop_gap_min && side_gap >= p.squeeze_gap_min);
    let log = walk(&g, Some(robot), 30.0);
    let stopped = log.iter().position(|h| h.forward_speed == 0.0 && !h.finished).unwrap();
    let t = finish_time(&log).expect("walker should get past");
    let waited = log.iter().filter(|h| h.forward_speed == 0.0 && !h.finished).count() as f64 * DT;
    assert!(waited >= p.patience - 1e-9, "{waited}");
    assert!(t > stopped as f64 * DT);
    let min = log.iter().map(|h| fp.distance_to(&robot, h.position)).fold(f64::INFINITY, f64::min);
    assert!(min >= p.body_radius, "{min}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn walker_invariants_around_a_parked_robot(
        x in 6.0f64..14.0, y in 0.35f64..1.65, theta in -3.1f64..3.1,
    ) {
        let g = corridor();
        let fp = Footprint::default();
        let p = HumanParams::default();
        let robot = Pose2::new(x, y, theta);
        prop_assume!(!plc_nav::world::footprint_collides(&g, &robot, &fp).unwrap());
        let log = walk(&g, Some(robot), 25.0);
        prop_assert_eq!(&log, &walk(&g, Some(robot), 25.0));
        for h in &log {
            prop_assert!(h.speed() <= p.preferred_speed * 1.05 + 1e-9);
            let c = g.world_to_cell(h.position).unwrap();
            prop_assert!(g.is_free(c));
            prop_assert!(fp.distance_to(&robot, h.position) >= p.body_radius - 1e-9,
                "walker at {:?} overlaps robot", h.position);
        }
    }
}
