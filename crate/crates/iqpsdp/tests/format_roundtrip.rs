use iqpsdp::format::{parse, read_instance, to_string, write_instance};
use iqpsdp_core::instances::{generate, ConstraintSpec, DomainSpec, Family, GenSpec};
use iqpsdp_core::IntDomain;

#[test]
fn generated_instances_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for k in 0..100u64 {
        let family = match k % 3 {
            0 => Family::DenseSpectrum { p: (k % 11) as f64 * 10.0 },
            1 => Family::Sparse { p: 30.0 },
            _ => Family::LowRank { p: 50.0 },
        };
        let domain = match k % 4 {
            0 => DomainSpec::Ternary,
            1 => DomainSpec::integer_default(),
            2 => DomainSpec::IntegerBox { lo: -3, hi: 7 },
            _ => DomainSpec::Custom((0..1 + k as usize % 7).map(|i| IntDomain::new(-(i as i64), 2)).collect()),
        };
        let constraints = [ConstraintSpec::None, ConstraintSpec::SumNonpositive, ConstraintSpec::Knapsack][k as usize % 3];
        let n = match &domain {
            DomainSpec::Custom(d) => d.len(),
            _ => 1 + k as usize % 12,
        };
        let inst = generate(&GenSpec { n, family, domain, constraints, seed: k }).unwrap();
        let path = dir.path().join(format!("{k}.iqp"));
        write_instance(&inst, &[format!("instance {k}")], &path).unwrap();
        let back = read_instance(&path).unwrap();
        assert_eq!(back, inst, "instance {k}");
        assert_eq!(to_string(&back, &[]), to_string(&inst, &[]));
    }
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = "iqp/1\n\n# a\n#b\nn 1\n  domain -1 1\nq 2\n# between\nl 0.5\nc -1\n\n";
    let inst = parse(text).unwrap();
    assert_eq!(inst.l_hat, vec![0.5]);
    assert_eq!(inst.c_hat, -1.0);
}

#[test]
fn missing_file_is_an_io_error() {
    let e = read_instance(std::path::Path::new("/nonexistent/x.iqp")).unwrap_err();
    assert!(matches!(e, iqpsdp::format::ReadError::Io(_)));
}
