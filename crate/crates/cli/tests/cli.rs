use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gos_core::build;
use gos_core::format::{parse, serialize, Document};
use gos_core::model::{AtomType, Catalog, Field};
use gos_core::rational::{int, zero};
use tempfile::TempDir;

fn gos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gos")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn points_file(dir: &TempDir) -> PathBuf {
    let (cat, c3) = build::point_cycle(3);
    let (_, p3) = build::point_path(3);
    let (_, c4) = build::point_cycle(4);
    let doc = Document { catalog: cat, descriptors: vec![c3, p3, c4], ..Default::default() };
    write(dir, "points.gos", &serialize(&doc))
}

fn surface_cycles_file(dir: &TempDir) -> PathBuf {
    let cat = Catalog::new("sc").with_atom(
        AtomType::symmetric("g2", Field::R, 2, int(2)).with_euler(int(-2)).with_l2(vec![zero(), int(2), zero()]).with_peg("x", 2),
    );
    let c3 = build::symmetric_cycle(&cat, "g2", 3);
    let c4 = build::symmetric_cycle(&cat, "g2", 4);
    let doc = Document { catalog: cat, descriptors: vec![c3, c4], ..Default::default() };
    write(dir, "cycles.gos", &serialize(&doc))
}

#[test]
fn validate_accepts_a_good_file() {
    let dir = TempDir::new().unwrap();
    let f = points_file(&dir);
    let o = gos(&["validate", s(&f)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("descriptor cycle3 ok"));
}

#[test]
fn validate_rejects_empty_file() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "empty.gos", "");
    let o = gos(&["validate", s(&f)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("empty"));
}

#[test]
fn validate_reports_port_range_with_line() {
    let dir = TempDir::new().unwrap();
    let text = "catalog c\natom g kind=symmetric field=R dim=2 basevol=2 basechi=-2\npeg g x ends=2\n\
                descriptor d catalog=c\nvertex v atom=g deg=1\nslot v x1 class=x\nedge e0 v.x1.1 v.x1.3\n";
    let f = write(&dir, "ports.gos", text);
    let o = gos(&["validate", s(&f)]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("line 7") && err.contains("port out of range"), "{err}");
}

#[test]
fn equiv_same_and_different() {
    let dir = TempDir::new().unwrap();
    let f = points_file(&dir);
    let same = gos(&["equiv", s(&f), "cycle3", "cycle3"]);
    assert_eq!(code(&same), 0);
    assert!(stdout(&same).starts_with("same-geometry=yes"));
    let cycles = gos(&["equiv", s(&f), "cycle3", "cycle4"]);
    assert_eq!(code(&cycles), 0);
    let diff = gos(&["equiv", s(&f), "cycle3", "path3"]);
    assert_eq!(code(&diff), 1);
    assert!(stdout(&diff).contains("radius="), "{}", stdout(&diff));
}

#[test]
fn common_cover_of_equal_descriptors_is_identity() {
    let dir = TempDir::new().unwrap();
    let f = points_file(&dir);
    let o = gos(&["common-cover", s(&f), "cycle3", "cycle3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = parse(&stdout(&o)).unwrap();
    assert!(doc.covers.iter().all(|m| m.total_degree == 1));
}

#[test]
fn common_cover_of_surface_cycles_has_twelve_vertices() {
    let dir = TempDir::new().unwrap();
    let f = surface_cycles_file(&dir);
    let o = gos(&["common-cover", s(&f), "g2_cycle3", "g2_cycle4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = parse(&stdout(&o)).unwrap();
    assert_eq!(doc.descriptors.len(), 3);
    assert!(doc.descriptors.iter().any(|d| d.vertices.len() == 12));
    // the emitted document validates again
    let out = write(&dir, "cc.gos", &stdout(&o));
    assert_eq!(code(&gos(&["validate", s(&out)])), 0);
}

#[test]
fn common_cover_out_of_budget_exits_three() {
    let dir = TempDir::new().unwrap();
    let f = surface_cycles_file(&dir);
    let o = gos(&["common-cover", s(&f), "g2_cycle3", "g2_cycle4", "--budget", "1", "--rungs", "1"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("exhausted"));
}

#[test]
fn output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let f = surface_cycles_file(&dir);
    let args = ["pipeline", s(&f), "g2_cycle3", "g2_cycle4", "--seed", "7"];
    assert_eq!(stdout(&gos(&args)), stdout(&gos(&args)));
}

#[test]
fn invariants_and_obstruction() {
    let dir = TempDir::new().unwrap();
    let f = surface_cycles_file(&dir);
    let o = gos(&["invariants", s(&f), "g2_cycle3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("euler=-9"), "{}", stdout(&o));
    let o = gos(&["obstruction", s(&f), "g2_cycle3", "g2_cycle4"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
}

#[test]
fn rigidity_surfaces() {
    let o = gos(&["rigidity", "--surfaces", "2", "4", "3", "3"]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).trim(), "commensurable=yes model_geometry=no");
    let o = gos(&["rigidity", "--surfaces", "2", "4", "4", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "commensurable=yes model_geometry=yes");
}

#[test]
fn rigidity_volumes() {
    assert_eq!(code(&gos(&["rigidity", "--volumes", "2", "6", "6", "2"])), 0);
    assert_eq!(code(&gos(&["rigidity", "--volumes", "2", "6", "4", "4"])), 1);
    assert_eq!(code(&gos(&["rigidity", "--volumes", "2", "x", "4", "4"])), 2);
}

#[test]
fn generated_pair_and_its_certificate() {
    let dir = TempDir::new().unwrap();
    let o = gos(&["generate-s7", "--f", "10", "--r", "5", "--di", "15"]);
    assert_eq!(code(&o), 0);
    let doc = parse(&stdout(&o)).unwrap();
    let h = doc.descriptor("h_prime").unwrap();
    assert_eq!((h.vertices.len(), h.edges.len()), (5, 6));
    let f = write(&dir, "s7.gos", &stdout(&o));
    assert_eq!(code(&gos(&["validate", s(&f)])), 0);
    assert_eq!(code(&gos(&["equiv", s(&f), "h_side_x", "h_prime"])), 0);

    let torsion = gos(&["pipeline", s(&f), "h_side", "h_prime"]);
    assert_eq!(code(&torsion), 2);
    assert!(stderr(&torsion).contains("stage=2 reason=missing-group-data"));

    let cert = gos(&["pipeline", s(&f), "h_side_x", "h_prime"]);
    assert_eq!(code(&cert), 0, "{}", stderr(&cert));
    let cf = write(&dir, "cert.gos", &stdout(&cert));
    let ok = gos(&["check", s(&cf)]);
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
}

#[test]
fn generator_rejects_bad_parameters() {
    assert_eq!(code(&gos(&["generate-s7", "--f", "10", "--r", "3", "--di", "15"])), 2);
}

#[test]
fn check_rejects_tampered_certificate() {
    let dir = TempDir::new().unwrap();
    let f = surface_cycles_file(&dir);
    let o = gos(&["pipeline", s(&f), "g2_cycle3", "g2_cycle4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let good = write(&dir, "good.gos", &text);
    assert_eq!(code(&gos(&["check", s(&good)])), 0);

    let tampered: String = text
        .lines()
        .map(|l| if l.starts_with("euler ") { l.replacen("-", "-1", 1) } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    assert_ne!(tampered.trim(), text.trim());
    let bad = write(&dir, "bad.gos", &tampered);
    let o = gos(&["check", s(&bad)]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
}

#[test]
fn missing_descriptor_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let f = points_file(&dir);
    let o = gos(&["equiv", s(&f), "cycle3", "nope"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no descriptor nope"));
}
