use std::collections::BTreeSet;

fn exported(src: &str) -> BTreeSet<String> {
    src.lines()
        .filter_map(|l| l.trim().split_once("extern \"C\" fn "))
        .map(|(_, rest)| rest.split('(').next().unwrap().to_string())
        .collect()
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{dir}/include/s1avg.h")).unwrap();
    let names = exported(&src);
    assert!(names.len() >= 15, "{names:?}");
    for n in &names {
        assert!(header.contains(&format!("{n}(")), "{n} missing from header");
    }
    for ty in ["typedef struct S1Config S1Config;", "typedef struct S1Sweep S1Sweep;", "typedef struct S1Expr S1Expr;"] {
        assert!(header.contains(ty), "{ty}");
    }
    assert!(header.contains("S1_STATUS_OK = 0"));
    assert!(header.contains("#ifndef S1AVG_H"));
}
