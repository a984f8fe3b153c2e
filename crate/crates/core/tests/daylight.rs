use gendesign::daylight::*;
use proptest::prelude::*;
use std::f64::consts::PI;

fn standard() -> FacadeDataset {
    synth_facade_dataset(&[0, 1, 2, 3], &SkySchedule::standard()).unwrap()
}

#[test]
fn equinox_noon_altitude() {
    // declination vanishes on day 81; closed form altitude = 90 - latitude
    let s = sun_position(HOUSTON_LATITUDE, 81, 12.0).unwrap();
    assert!((s.altitude_deg - (90.0 - HOUSTON_LATITUDE)).abs() < 0.01, "{s:?}");
    assert!((s.altitude_deg - 60.24).abs() < 0.01);
    assert!((s.azimuth_deg - 180.0).abs() < 1e-9);
    assert!(sun_position(HOUSTON_LATITUDE, 81, 0.0).unwrap().altitude_deg <= 0.0);
}

#[test]
fn noon_is_daily_maximum_and_symmetric() {
    for month in 1..=12 {
        let d = day_of_year(month, 15);
        let noon = sun_position(HOUSTON_LATITUDE, d, 12.0).unwrap();
        for k in 1..12 {
            let dh = k as f64 * 0.5;
            let am = sun_position(HOUSTON_LATITUDE, d, 12.0 - dh).unwrap();
            let pm = sun_position(HOUSTON_LATITUDE, d, 12.0 + dh).unwrap();
            assert!(am.altitude_deg < noon.altitude_deg);
            assert!((am.altitude_deg - pm.altitude_deg).abs() < 1e-9);
            assert!((am.azimuth_deg + pm.azimuth_deg - 360.0).abs() < 1e-9);
            assert!(am.azimuth_deg < 180.0 && pm.azimuth_deg > 180.0);
        }
    }
}

#[test]
fn solstice_declination() {
    // day 172: declination close to +23.45, noon altitude 90 - lat + decl
    let s = sun_position(HOUSTON_LATITUDE, 172, 12.0).unwrap();
    let decl = 23.45 * (360.0f64 * (284.0 + 172.0) / 365.0).to_radians().sin();
    assert!((s.altitude_deg - (90.0 - HOUSTON_LATITUDE + decl)).abs() < 1e-9);
}

// Numeric integration of L cos(a) cos(b) / r^2 over the cell area.
fn integrate_cell(room: &RoomModel, row: usize, col: usize, sensor: [f64; 3], edv: f64, n: usize) -> f64 {
    let (x0, x1, z0, z1) = room.cell_rect(row, col);
    let (hx, hz) = ((x1 - x0) / n as f64, (z1 - z0) / n as f64);
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            let p = [x0 + (i as f64 + 0.5) * hx, 0.0, z0 + (j as f64 + 0.5) * hz];
            let v = [sensor[0] - p[0], sensor[1] - p[1], sensor[2] - p[2]];
            let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let (ca, cb) = (v[1] / r, -v[2] / r);
            if ca > 0.0 && cb > 0.0 {
                sum += ca * cb / (r * r) * hx * hz;
            }
        }
    }
    edv / PI * sum
}

#[test]
fn single_cell_diffuse_matches_area_integration() {
    let room = RoomModel::default();
    // cell just above the facade centre; work-plane sensor 2 m inside on its normal
    let (row, col) = (3, 8);
    let c = room.cell_center(row, col);
    assert_eq!(c, [4.75, 0.0, 2.25]);
    let sensor = [c[0], 2.0, room.sensor_height];
    let point = diffuse_from_cell(&room, row, col, sensor, 10_000.0);
    let r2: f64 = 2.0 * 2.0 + 1.5 * 1.5;
    let closed = 10_000.0 / PI * 0.25 * (2.0 / r2.sqrt()) * (1.5 / r2.sqrt()) / r2;
    assert!((point - closed).abs() < 1e-9);
    let numeric = integrate_cell(&room, row, col, sensor, 10_000.0, 400);
    let rel = (point - numeric).abs() / numeric;
    assert!(rel < 0.02, "point {point} numeric {numeric} rel {rel}");
}

#[test]
fn point_source_error_shrinks_with_distance() {
    let room = RoomModel::default();
    let c = room.cell_center(3, 8);
    let mut last = f64::INFINITY;
    // move away along a fixed ray from the cell centre
    for k in [0.5, 1.0, 2.0, 4.0] {
        let sensor = [c[0], 2.0 * k, c[2] - 1.5 * k];
        let p = diffuse_from_cell(&room, 3, 8, sensor, 10_000.0);
        let n = integrate_cell(&room, 3, 8, sensor, 10_000.0, 200);
        let rel = (p - n).abs() / n;
        assert!(rel < last, "k {k}: {rel}");
        last = rel;
    }
    assert!(last < 1e-3);
}

#[test]
fn diffuse_drops_when_cell_below_sensor() {
    let room = RoomModel::default();
    let c = room.cell_center(7, 3);
    assert_eq!(diffuse_from_cell(&room, 7, 3, [c[0], 2.0, 0.75], 10_000.0), 0.0);
}

fn hit_oracle(room: &RoomModel, s: [f64; 3], sun: &SunPosition) -> Option<(usize, usize)> {
    let gamma = (sun.azimuth_deg - 180.0).to_radians();
    if sun.altitude_deg <= 0.0 || gamma.abs() >= PI / 2.0 {
        return None;
    }
    let horizontal = s[1] / gamma.cos();
    let z = s[2] + horizontal * sun.altitude_deg.to_radians().tan();
    let x = s[0] - s[1] * gamma.tan();
    let (x0, z1) = (room.margin, room.height);
    if x < x0 || x >= x0 + 9.0 || z < 0.0 || z >= z1 {
        return None;
    }
    Some((((z1 - z) / 0.5).floor() as usize, ((x - x0) / 0.5).floor() as usize))
}

#[test]
fn direct_ray_matches_profile_angle_oracle() {
    let room = RoomModel::default();
    let sensors = room.sensors();
    let sched = SkySchedule::standard();
    let mut hits = 0;
    for (k, s) in sensors.iter().enumerate().step_by(7) {
        for step in &sched.steps {
            let got = direct_hit_cell(&room, *s, &step.sun);
            assert_eq!(got, hit_oracle(&room, *s, &step.sun), "sensor {k} {:?}", step.sun);
            hits += got.is_some() as usize;
        }
    }
    assert!(hits > 0);
}

#[test]
fn opaque_facade_is_dark() {
    let room = RoomModel::default();
    let sched = SkySchedule::standard();
    let closed = FacadePattern::closed();
    for i in (0..256).step_by(17) {
        for step in &sched.steps {
            assert_eq!(sensor_illuminance(&room, &closed, i, step), 0.0);
        }
    }
    let r = compute_sda(&room, &closed, &sched).unwrap();
    assert_eq!(r.sda_pct, 0.0);
    assert_eq!(r.label, PerformanceLabel::A);
    assert!(r.da.iter().all(|&d| d == 0.0));
}

#[test]
fn empty_schedule_rejected() {
    let sched = SkySchedule {
        latitude_deg: 30.0,
        steps: vec![],
    };
    assert!(compute_sda(&RoomModel::default(), &FacadePattern::open(), &sched).is_err());
}

#[test]
fn evaluator_matches_direct_computation() {
    let room = RoomModel::default();
    let sched = SkySchedule::standard();
    let eval = SdaEvaluator::new(&room, &sched).unwrap();
    let pat = &run_sequence(5)[70];
    for i in (0..256).step_by(13) {
        let series = eval.sensor_series(pat, i);
        for (t, step) in sched.steps.iter().enumerate() {
            assert_eq!(series[t], sensor_illuminance(&room, pat, i, step));
        }
    }
}

#[test]
fn run_sequence_is_nested_prefix() {
    let runs = run_sequence(0);
    assert_eq!(runs.len(), RUNS_PER_SEED);
    assert_eq!(runs.len(), 143);
    assert_eq!(runs[0].open_count(), 1);
    assert_eq!(runs[142].open_count(), 143);
    for w in runs.windows(2) {
        assert!(w[0].is_subset_of(&w[1]));
        assert_eq!(w[0].open_count() + 1, w[1].open_count());
    }
    assert_eq!(run_sequence(0), runs);
    assert_ne!(run_sequence(1), runs);
}

#[test]
fn facade_dataset_invariants() {
    let ds = standard();
    assert_eq!(ds.len(), 572);
    assert_eq!(ds.dataset.len(), 572);
    for (i, r) in ds.records.iter().enumerate() {
        assert_eq!(r.run, i % 143);
        assert_eq!(r.wwr_pct, 100.0 * (r.run + 1) as f64 / 144.0);
        assert_eq!(label_of(r.sda_pct).unwrap().letter(), r.label);
        assert_eq!(ds.dataset.label(i), label_of(r.sda_pct).unwrap().index());
        assert_eq!(ds.dataset.image(i), &ds.patterns[i].to_image());
    }
    assert!(ds.records.iter().filter(|r| r.run == 0).all(|r| (0.5..=11.0).contains(&r.wwr_pct)));
    let mut pairs = 0;
    for w in ds.records.windows(2) {
        if w[0].seed == w[1].seed {
            assert!(w[0].sda_pct <= w[1].sda_pct, "{:?} -> {:?}", w[0], w[1]);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 568);
    assert_eq!(synth_facade_dataset(&[2], &SkySchedule::standard()).unwrap().len(), 143);
    assert!(synth_facade_dataset(&[], &SkySchedule::standard()).is_err());
}

#[test]
fn band_mean_sda_increases_across_reference_wwr_bands() {
    let ds = standard();
    let bands = [(0.5, 11.0), (9.0, 21.5), (17.5, 30.5), (29.0, 40.5), (38.5, 71.5)];
    let means: Vec<f64> = bands
        .iter()
        .map(|&(lo, hi)| {
            let v: Vec<f64> = ds
                .records
                .iter()
                .filter(|r| (lo..=hi).contains(&r.wwr_pct))
                .map(|r| r.sda_pct)
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[0] < w[1], "{means:?}");
    }
}

#[test]
fn all_open_is_maximal() {
    let room = RoomModel::default();
    let sched = SkySchedule::standard();
    let eval = SdaEvaluator::new(&room, &sched).unwrap();
    let top = eval.evaluate(&FacadePattern::open()).sda_pct;
    for r in standard().records {
        assert!(r.sda_pct <= top);
    }
}

#[test]
fn facade_dataset_save_load() {
    let ds = synth_facade_dataset(&[7], &SkySchedule::standard()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    ds.save(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.csv")).unwrap();
    assert!(text.starts_with("seed,run,wwr_pct,sda_pct,label,filename\n7,0,"));
    assert_eq!(FacadeDataset::load(dir.path()).unwrap(), ds);
}

fn any_pattern() -> impl Strategy<Value = FacadePattern> {
    prop::collection::vec(any::<bool>(), CELLS).prop_map(|v| {
        let mut cells = [false; CELLS];
        cells.copy_from_slice(&v);
        FacadePattern::from_cells(cells)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn opening_a_cell_never_darkens(p in any_pattern(), cell in 0usize..CELLS) {
        let room = RoomModel::default();
        let sched = SkySchedule::standard();
        let eval = SdaEvaluator::new(&room, &sched).unwrap();
        let mut q = p.clone();
        q.set(cell / COLS, cell % COLS, true);
        for s in (0..256).step_by(5) {
            for (a, b) in eval.sensor_series(&p, s).iter().zip(eval.sensor_series(&q, s)) {
                prop_assert!(*a <= b);
            }
        }
        prop_assert!(eval.evaluate(&p).sda_pct <= eval.evaluate(&q).sda_pct);
    }

    #[test]
    fn labels_partition_percent_range(s in 0.0f64..=100.0) {
        let l = label_of(s).unwrap();
        let (lo, hi) = l.sda_range();
        prop_assert!(s >= lo && (s < hi || (l == PerformanceLabel::E && s <= 100.0)));
    }

    #[test]
    fn pattern_text_roundtrip(p in any_pattern()) {
        prop_assert_eq!(FacadePattern::from_text(&p.to_text()).unwrap(), p);
    }
}
