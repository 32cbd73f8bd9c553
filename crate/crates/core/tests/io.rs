use std::fs;

use proptest::prelude::*;
use statbench::em::SystemMatrix;
use statbench::io::{self, IoError, Location};
use statbench::net::{LinkCounts, RouteMatrix};
use statbench::ocr::{gen_synthetic_glyphs, Jitter};
use statbench::pet::{shepp_logan, Sinogram};
use statbench::renewal::{Family, ScalingReport};
use statbench::rng::Stream;

fn line_of(err: &IoError) -> usize {
    match err.location() {
        Some(Location::Line(n)) => n,
        other => panic!("expected a line location, got {other:?}: {err}"),
    }
}

#[test]
fn random_16x16_pgm_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.pgm");
    let mut rng = Stream::new(3);
    let data: Vec<u16> = (0..256).map(|_| (rng.next_u64() >> 48) as u16).collect();
    io::write_pgm(&path, 16, 16, &data).unwrap();
    let back = io::read_pgm(&path).unwrap();
    assert_eq!((back.width, back.height, back.maxval), (16, 16, 65535));
    assert_eq!(back.data, data);
    let bytes = fs::read(&path).unwrap();
    assert!(bytes.starts_with(b"P5\n16 16\n65535\n"));
    // big-endian samples
    assert_eq!(u16::from_be_bytes([bytes[15], bytes[16]]), data[0]);
}

#[test]
fn truncated_pgm_names_offset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.pgm");
    io::write_pgm(&path, 4, 4, &[7; 16]).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
    let err = io::read_pgm(&path).unwrap_err();
    assert_eq!(err.location(), Some(Location::Offset(bytes.len() - 5)));
    let msg = err.to_string();
    assert!(
        msg.contains("MalformedFile") && msg.contains(&format!("byte offset {}", bytes.len() - 5)),
        "{msg}"
    );
}

#[test]
fn scaled_image_quantizes_to_the_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let values: Vec<f64> = (0..12).map(|i| i as f64 * 0.37).collect();
    let scale = io::write_scaled_image(&path, 4, 3, &values).unwrap();
    let (w, h, back) = io::read_scaled_image(&path).unwrap();
    assert_eq!((w, h), (4, 3));
    for (a, b) in values.iter().zip(&back) {
        assert!((a - b).abs() <= 0.5 * scale + 1e-15);
    }
    assert_eq!(back[11], values[11]);
    assert_eq!(
        fs::read_to_string(io::scale_path(&path)).unwrap(),
        format!("scale={}\n", io::fmt_f64(scale))
    );
}

#[test]
fn graph_self_loop_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.txt");
    fs::write(&path, "3 3\n0 1 1.0\n1 1 2.0\n1 2 1.0\n").unwrap();
    let err = io::read_graph(&path).unwrap_err();
    assert_eq!(line_of(&err), 3);
    assert!(err.to_string().contains("line 3"), "{err}");
    fs::write(&path, "3 3\n0 1 1.0\n1 2 2.0\n\n2 1 1.0\n").unwrap();
    assert_eq!(line_of(&io::read_graph(&path).unwrap_err()), 5);
    fs::write(&path, "3 2\n0 1 1.0\n1 7 2.0\n").unwrap();
    assert_eq!(line_of(&io::read_graph(&path).unwrap_err()), 3);
    fs::write(&path, "3 2\n0 1 1.0\n1 2 x\n").unwrap();
    assert_eq!(line_of(&io::read_graph(&path).unwrap_err()), 3);
    fs::write(&path, "4 2\n0 1 1.0\n1 2 1.0\n").unwrap();
    assert!(matches!(
        io::read_graph(&path).unwrap_err().location(),
        Some(Location::Whole)
    ));
}

#[test]
fn matrix_and_vector_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = SystemMatrix::from_triplets(
        3,
        4,
        [(0, 0, 0.1), (1, 3, 2.5e-9), (2, 1, 7.0), (0, 2, 1.0 / 3.0)],
    )
    .unwrap();
    io::write_matrix(&dir.path().join("a.txt"), &a).unwrap();
    let text = fs::read_to_string(dir.path().join("a.txt")).unwrap();
    assert_eq!(text.lines().next(), Some("3 4 4"));
    assert_eq!(io::read_matrix(&dir.path().join("a.txt")).unwrap(), a);
    let v = vec![0.0, 1e-300, 1.0 / 7.0, 12345.678];
    io::write_vector(&dir.path().join("v.txt"), &v).unwrap();
    assert_eq!(io::read_vector(&dir.path().join("v.txt")).unwrap(), v);
    fs::write(dir.path().join("a.txt"), "2 2 2\n0 0 1\n0 5 1\n").unwrap();
    assert_eq!(
        line_of(&io::read_matrix(&dir.path().join("a.txt")).unwrap_err()),
        3
    );
}

#[test]
fn pet_and_net_formats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let s = Sinogram::new(2, 3, vec![0, 4, 9, 1, 1, 2]).unwrap();
    io::write_sinogram(&p("s.csv"), &s).unwrap();
    assert_eq!(io::read_sinogram(&p("s.csv")).unwrap(), s);
    assert!(fs::read_to_string(p("s.csv"))
        .unwrap()
        .starts_with("angle,bin,count\n0,0,0\n"));
    fs::write(p("bad.csv"), "angle,bin,count\n0,0,1\n0,0,2\n").unwrap();
    assert_eq!(line_of(&io::read_sinogram(&p("bad.csv")).unwrap_err()), 3);
    fs::write(p("bad.csv"), "angle,bin,count\n0,0,1\n0,1\n").unwrap();
    assert_eq!(line_of(&io::read_sinogram(&p("bad.csv")).unwrap_err()), 3);

    let e = shepp_logan();
    io::write_ellipses(&p("e.csv"), &e).unwrap();
    assert_eq!(io::read_ellipses(&p("e.csv")).unwrap(), e);

    let od = vec![(0, 3), (2, 1)];
    io::write_od(&p("od.csv"), &od).unwrap();
    assert_eq!(io::read_od(&p("od.csv")).unwrap(), od);
    let counts = LinkCounts::new(2, vec![vec![1, 2], vec![30, 0]]).unwrap();
    io::write_counts(&p("c.csv"), &counts).unwrap();
    assert_eq!(io::read_counts(&p("c.csv")).unwrap(), counts);
    let routes = RouteMatrix {
        routes: vec![],
        n_links: 2,
    };
    io::write_estimates(&p("r.csv"), &routes, &[]).unwrap();
    assert_eq!(
        fs::read_to_string(p("r.csv")).unwrap(),
        "route_id,origin,destination,rate\n"
    );
}

#[test]
fn corpus_formats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = gen_synthetic_glyphs(2, &Jitter::default(), 9).unwrap();
    let path = dir.path().join("c.csv");
    io::write_corpus(&path, &corpus).unwrap();
    assert_eq!(io::read_corpus(&path).unwrap(), corpus);

    let mut labels = String::from("file,label\n");
    for (i, (img, l)) in corpus.iter().enumerate() {
        io::write_pgm8(&dir.path().join(format!("{i}.pgm")), img).unwrap();
        labels.push_str(&format!("{i}.pgm,{l}\n"));
    }
    fs::write(dir.path().join("labels.csv"), labels).unwrap();
    let back = io::read_pgm_corpus(&dir.path().join("labels.csv")).unwrap();
    assert_eq!(back.len(), corpus.len());
    for i in 0..corpus.len() {
        assert_eq!(back.label(i), corpus.label(i));
        assert!(back.image(i).l2_distance(corpus.image(i)) <= 16.0 * 0.5 / 255.0);
    }
}

#[test]
fn grid_cdf_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let f = Family::LogNormal(0.5).grid(10.0, 1000).unwrap();
    io::write_grid_cdf(&path, &f).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# x_max=10\n# tail_rate="));
    assert_eq!(io::read_grid_cdf(&path).unwrap(), f);
    let mut lines: Vec<&str> = text.lines().collect();
    lines[10] = "0.007,0.5";
    fs::write(&path, lines.join("\n")).unwrap();
    assert_eq!(line_of(&io::read_grid_cdf(&path).unwrap_err()), 11);

    let r = ScalingReport {
        q: 0.5,
        defect: 8e-5,
        iterations: 17,
        converged: true,
    };
    io::write_reports(&path, &[r]).unwrap();
    assert_eq!(
        fs::read_to_string(&path).unwrap(),
        "q,defect,iterations,converged\n0.5,0.00008,17,true\n"
    );
}

#[test]
fn missing_file_is_an_io_error() {
    let err = io::read_vector(std::path::Path::new("/nonexistent/v.txt")).unwrap_err();
    assert!(matches!(err, IoError::Io { .. }));
}

proptest! {
    #[test]
    fn pgm_round_trip(w in 1usize..20, h in 1usize..20, seed: u64) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.pgm");
        let mut rng = Stream::new(seed);
        let data: Vec<u16> = (0..w * h).map(|_| rng.next_u64() as u16).collect();
        io::write_pgm(&path, w, h, &data).unwrap();
        prop_assert_eq!(io::read_pgm(&path).unwrap().data, data);
    }

    #[test]
    fn vector_round_trip(v in proptest::collection::vec(-1e12f64..1e12, 0..50)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        io::write_vector(&path, &v).unwrap();
        prop_assert_eq!(io::read_vector(&path).unwrap(), v);
    }
}
