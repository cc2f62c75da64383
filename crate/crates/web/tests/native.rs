use flatwave_web::{decay_json, evolve_json, fit_json};

#[test]
fn evolution_returns_frames_with_decaying_energy() {
    let v: serde_json::Value = serde_json::from_str(&evolve_json(0.05, 3.0, 1.0, 4).unwrap()).unwrap();
    assert_eq!(v["x"].as_array().unwrap().len(), 64);
    let frames = v["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 5);
    let e: Vec<f64> = frames.iter().map(|f| f["energy"].as_f64().unwrap()).collect();
    assert!(e.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn decay_table_has_all_series() {
    let v: serde_json::Value = serde_json::from_str(&decay_json("gaussian", 3, 20.0, 4).unwrap()).unwrap();
    for name in ["eta_l2", "deta_l2", "d2eta_l2", "u_h2"] {
        assert_eq!(v["series"][name].as_array().unwrap().len(), 4, "{name}");
    }
}

#[test]
fn fit_recovers_power_law_and_rejects_bad_input() {
    let t: Vec<f64> = (0..20).map(f64::from).collect();
    let v: Vec<f64> = t.iter().map(|t| 3.0 * (1.0 + t).powf(-1.5)).collect();
    let f: serde_json::Value = serde_json::from_str(&fit_json(&t, &v, 1.0, 19.0).unwrap()).unwrap();
    assert!((f["slope"].as_f64().unwrap() + 1.5).abs() < 1e-10);
    assert!(fit_json(&t, &v[..3], 1.0, 19.0).is_err());
    assert!(decay_json("square", 3, 20.0, 4).is_err());
    assert!(evolve_json(0.05, 3.0, -1.0, 4).is_err());
}
