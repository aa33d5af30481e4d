use agenet_web::{coupling_json, meanfield_json, network_json};

#[test]
fn network_run_has_matching_series() {
    let v = network_json(200, 0.5, 0.1, 1.0, 3).unwrap();
    let t = v["t"].as_array().unwrap();
    assert_eq!(t.len(), 201);
    assert_eq!(v["activity"].as_array().unwrap().len(), t.len());
    assert_eq!(v["meanfield"][0], 1.0);
    assert!(v["spikes"].as_u64().unwrap() > 0);
    assert!(v["raster"].as_array().unwrap().iter().all(|p| p[1].as_u64().unwrap() < 100));
}

#[test]
fn meanfield_profiles_are_densities() {
    let v = meanfield_json(0.5, 0.0, 1.0).unwrap();
    let dx = v["x"][1].as_f64().unwrap() - v["x"][0].as_f64().unwrap();
    for row in v["density"].as_array().unwrap() {
        let mass: f64 = row["f"].as_array().unwrap().iter().map(|f| f.as_f64().unwrap()).sum::<f64>() * dx;
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
}

#[test]
fn coupling_rows_and_bad_input() {
    let v = coupling_json(0.2, 3, 1).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert!(v["slope"].as_f64().is_some());
    assert!(network_json(0, 0.5, 0.1, 1.0, 3).is_err());
    assert!(coupling_json(0.2, 1, 1).is_err());
}
