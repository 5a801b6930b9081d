use std::fs;

use snls_core::flows::{evolve, DampedNlsStepper, DampingSpec, FlowParams, Potential};
use snls_core::stochastic::{BrownianPath, NoiseSpec, SnlsStepper, StreamKey};
use snls_core::{Complex64, ComplexField, SpatialGrid, TrajectoryRecord};
use snls_lab::format::{read_field, read_record, write_field, write_record, RecordWriter};
use snls_lab::LabError;

fn snls_record() -> TrajectoryRecord {
    let grid = SpatialGrid::new(1, 16.0, 32).unwrap();
    let params = FlowParams::new(grid, 0.01).unwrap();
    let noise = NoiseSpec::new(&grid, Potential::default(), 0.3).unwrap();
    let path = BrownianPath::sample(StreamKey::new(7, 3), 0.01, 0.5).unwrap();
    let stepper = SnlsStepper::new(params, noise, path).unwrap().tracking_convolution().unwrap();
    evolve(&ComplexField::gaussian(grid, 1.0, 1.0), stepper, 0.5, &[0.1, 0.2, 0.3, 0.4]).unwrap()
}

fn damped_record() -> TrajectoryRecord {
    let grid = SpatialGrid::new(2, 8.0, 16).unwrap();
    let params = FlowParams::new(grid, 0.01).unwrap().with_dealiasing(true);
    let damping = DampingSpec::new(&grid, Potential::default(), 0.1).unwrap();
    evolve(&ComplexField::gaussian(grid, 0.5, 1.0), DampedNlsStepper::new(params, damping), 0.2, &[0.1]).unwrap()
}

fn assert_names(err: LabError, file: &std::path::Path) {
    let msg = err.to_string();
    assert!(matches!(err, LabError::Format { .. }), "{msg}");
    assert!(msg.contains(&file.display().to_string()), "{msg}");
}

#[test]
fn field_round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let grid = SpatialGrid::new(2, 5.5, 16).unwrap();
    let u = ComplexField::from_fn(grid, |x| Complex64::new(x[0].sin() / 3.0, -x[1] * 1e-300));
    let file = dir.path().join("u.field");
    write_field(&file, &u).unwrap();
    let back = read_field(&file).unwrap();
    assert_eq!(back, u);
    assert_eq!(fs::metadata(&file).unwrap().len(), 16 + 256 * 16);
}

#[test]
fn truncated_field_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let u = ComplexField::gaussian(SpatialGrid::new(1, 4.0, 16).unwrap(), 1.0, 1.0);
    let file = dir.path().join("cut.field");
    write_field(&file, &u).unwrap();
    let bytes = fs::read(&file).unwrap();
    fs::write(&file, &bytes[..bytes.len() - 5]).unwrap();
    assert_names(read_field(&file).unwrap_err(), &file);
}

#[test]
fn field_with_trailing_bytes_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let u = ComplexField::gaussian(SpatialGrid::new(1, 4.0, 16).unwrap(), 1.0, 1.0);
    let file = dir.path().join("long.field");
    write_field(&file, &u).unwrap();
    let mut bytes = fs::read(&file).unwrap();
    bytes.push(0);
    fs::write(&file, bytes).unwrap();
    assert_names(read_field(&file).unwrap_err(), &file);
}

#[test]
fn snls_record_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = snls_record();
    let file = dir.path().join("snls.rec");
    write_record(&file, &rec).unwrap();
    assert_eq!(read_record(&file).unwrap(), rec);
}

#[test]
fn damped_record_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = damped_record();
    assert!(rec.dissipation.is_some());
    let file = dir.path().join("damped.rec");
    write_record(&file, &rec).unwrap();
    assert_eq!(read_record(&file).unwrap(), rec);
}

#[test]
fn appended_frames_match_a_single_write() {
    let dir = tempfile::tempdir().unwrap();
    let rec = snls_record();
    let mut head = rec.clone();
    for k in [2usize, 4] {
        head.steps.truncate(k);
        head.fields.truncate(k);
        head.mass.truncate(k);
        let c = head.convolution.as_mut().unwrap();
        c.ito.truncate(k - 1);
        c.milstein.truncate(k - 1);
    }
    let staged = dir.path().join("staged.rec");
    let mut w = RecordWriter::create(&staged, &head).unwrap();
    w.append_new(&rec).unwrap();
    drop(w);
    let back = read_record(&staged).unwrap();
    assert_eq!(back.fields, rec.fields);
    assert_eq!(back.meta.rng_cursor, rec.meta.rng_cursor);
    assert_eq!(back.meta.brownian_value, rec.meta.brownian_value);

    let reopened = dir.path().join("reopened.rec");
    let mut w = RecordWriter::create(&reopened, &head).unwrap();
    drop(w);
    w = RecordWriter::append_to(&reopened, head.len()).unwrap();
    w.append_new(&rec).unwrap();
    drop(w);
    assert_eq!(read_record(&reopened).unwrap(), back);
}

#[test]
fn truncated_record_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("cut.rec");
    write_record(&file, &snls_record()).unwrap();
    let bytes = fs::read(&file).unwrap();
    for cut in [4, 12, 40, bytes.len() / 2, bytes.len() - 1] {
        fs::write(&file, &bytes[..cut]).unwrap();
        assert_names(read_record(&file).unwrap_err(), &file);
    }
}

#[test]
fn corrupted_record_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.rec");
    write_record(&file, &snls_record()).unwrap();
    let good = fs::read(&file).unwrap();

    let mut bad_magic = good.clone();
    bad_magic[0] = b'X';
    fs::write(&file, &bad_magic).unwrap();
    assert_names(read_record(&file).unwrap_err(), &file);

    let mut bad_len = good.clone();
    bad_len[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
    fs::write(&file, &bad_len).unwrap();
    assert_names(read_record(&file).unwrap_err(), &file);

    let hlen = u32::from_le_bytes(good[8..12].try_into().unwrap()) as usize;
    let mut bad_tag = good.clone();
    bad_tag[12 + hlen] = b'X';
    fs::write(&file, &bad_tag).unwrap();
    assert_names(read_record(&file).unwrap_err(), &file);
}

#[test]
fn missing_record_reports_io_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("absent.rec");
    let err = read_record(&file).unwrap_err();
    assert!(matches!(err, LabError::Io { .. }));
    assert!(err.to_string().contains("absent.rec"));
}
