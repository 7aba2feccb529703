// SPDX-License-Identifier: Apache-2.0

use qfluct::dynamics::io::{read_map_file, write_map_file};
use qfluct::dynamics::DerivativeSource;
use qfluct::models::{jc_reduced_map, JCParams};
use qfluct::pipeline::{run_pipeline, PipelineOptions};
use qfluct::synthetic::random_trajectory;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn file_round_trip_preserves_maps_and_derivatives() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("jc.csv");
    let traj = jc_reduced_map(&JCParams::weak(1.0, 5.0, 51)).unwrap();
    write_map_file(&traj, &path).unwrap();
    let back = read_map_file(&path).unwrap();
    assert_eq!(back.len(), traj.len());
    assert_eq!(back.times(), traj.times());
    for i in 0..traj.len() {
        assert_eq!(back.map(i).distance(traj.map(i)), 0.0);
        assert_eq!(
            back.derivative(i)
                .unwrap()
                .distance(&traj.derivative(i).unwrap()),
            0.0
        );
    }
    assert!(matches!(
        back.derivative_source(),
        DerivativeSource::Analytic(_)
    ));
}

#[test]
fn pipeline_on_reloaded_trajectory_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("qutrit.csv");
    let traj = random_trajectory(&mut ChaCha8Rng::seed_from_u64(3), 3, 1.0, 33);
    write_map_file(&traj, &path).unwrap();
    let back = read_map_file(&path).unwrap();
    let opts = PipelineOptions {
        betas: vec![0.7],
        ..Default::default()
    };
    let render = |t| {
        let mut buf = Vec::new();
        run_pipeline(t, &opts)
            .unwrap()
            .write_lambda_csv(&mut buf)
            .unwrap();
        buf
    };
    assert_eq!(render(&traj), render(&back));
}

#[test]
fn malformed_files_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let traj = random_trajectory(&mut ChaCha8Rng::seed_from_u64(4), 2, 1.0, 21);
    write_map_file(&traj, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let broken: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, l)| {
            if i == 7 {
                l.replacen(',', ",x", 3)
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&path, broken.join("\n")).unwrap();
    let err = read_map_file(&path).unwrap_err().to_string();
    assert!(err.contains("line 8"), "{err}");
}
