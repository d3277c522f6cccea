use std::fs;
use std::path::Path;

use drought_impact::ingest::{
    load_impacts, load_precip, load_regions, write_impacts, write_precip, write_regions, Category,
    Inputs,
};
use drought_impact::Error;

fn precip_csv(regions: &[&str], months: usize, skip: Option<(&str, &str)>) -> String {
    let mut s = String::from("region_id,month,precip_mm\n");
    for r in regions {
        for i in 0..months {
            let (y, m) = (1986 + i / 12, i % 12 + 1);
            let ym = format!("{y}-{m:02}");
            if skip == Some((r, ym.as_str())) {
                continue;
            }
            s += &format!("{r},{ym},{}\n", 10.0 + (i % 7) as f64 * 3.5);
        }
    }
    s
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const REGIONS: &str = "region_id,lc,phr,rwpd,taesd\nTX-001,cropland,phr1,north,d1\nTX-002,forest,phr2,south,d2\n";

#[test]
fn two_regions_give_two_full_series() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", &precip_csv(&["TX-001", "TX-002"], 360, None));
    let series = load_precip(&p).unwrap();
    assert_eq!(series.len(), 2);
    assert!(series.iter().all(|s| s.len() == 360));
}

#[test]
fn gap_names_the_missing_month() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", &precip_csv(&["TX-001"], 360, Some(("TX-001", "1995-06"))));
    let err = load_precip(&p).unwrap_err().to_string();
    assert!(err.contains("1995-06") && err.contains("TX-001"), "{err}");
}

#[test]
fn negative_depth_cites_its_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines: Vec<String> = precip_csv(&["TX-001"], 30, None).lines().map(String::from).collect();
    // Data row 17 is line 18 of the file (after the header).
    lines[17] = "TX-001,1987-05,-3.0".into();
    let p = write(dir.path(), "p.csv", &(lines.join("\n") + "\n"));
    let err = load_precip(&p).unwrap_err();
    assert!(matches!(err, Error::Invalid(_)));
    assert!(err.to_string().contains("row 17"), "{err}");
}

#[test]
fn duplicate_month_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = precip_csv(&["TX-001"], 24, None);
    body += "TX-001,1986-03,5.0\n";
    let p = write(dir.path(), "p.csv", &body);
    assert!(load_precip(&p).is_err());
}

#[test]
fn header_must_match_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", "region,month,precip_mm\nTX-001,1986-01,3\n");
    assert!(load_precip(&p).is_err());
    let p = write(dir.path(), "p2.csv", "region_id,month,precip_mm,extra\nTX-001,1986-01,3,1\n");
    assert!(load_precip(&p).is_err());
}

#[test]
fn impacts_accept_valid_rows_and_zero_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "i.csv",
        "region_id,month,category,count\nTX-001,2011-07,fire,3\nTX-001,2011-08,agriculture,0\n",
    );
    let recs = load_impacts(&p).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].category, Category::Fire);
    assert_eq!(recs[0].count, 3);
    assert_eq!(recs[1].count, 0);
}

#[test]
fn unknown_category_lists_the_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i.csv", "region_id,month,category,count\nTX-001,2011-07,weather,1\n");
    let err = load_impacts(&p).unwrap_err().to_string();
    for c in Category::ALL {
        assert!(err.contains(c.key()), "{err} lacks {c}");
    }
}

#[test]
fn malformed_month_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "i.csv", "region_id,month,category,count\nTX-001,2011-7,fire,1\n");
    assert!(load_impacts(&p).is_err());
}

#[test]
fn regions_reject_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.csv", &format!("{REGIONS}TX-001,urban,phr1,north,d1\n"));
    assert!(load_regions(&p).is_err());
    let p = write(dir.path(), "r2.csv", REGIONS);
    assert_eq!(load_regions(&p).unwrap().len(), 2);
}

#[test]
fn cross_references_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", &precip_csv(&["TX-001", "TX-003"], 24, None));
    let i = write(dir.path(), "i.csv", "region_id,month,category,count\n");
    let r = write(dir.path(), "r.csv", REGIONS);
    let err = Inputs::load(&p, &i, &r).unwrap_err().to_string();
    assert!(err.contains("TX-003"), "{err}");

    let p = write(dir.path(), "p.csv", &precip_csv(&["TX-001"], 24, None));
    let i = write(dir.path(), "i.csv", "region_id,month,category,count\nTX-009,1986-02,fire,1\n");
    let err = Inputs::load(&p, &i, &r).unwrap_err().to_string();
    assert!(err.contains("TX-009"), "{err}");
}

#[test]
fn tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "p.csv", &precip_csv(&["TX-001", "TX-002"], 40, None));
    let i = write(
        dir.path(),
        "i.csv",
        "region_id,month,category,count\nTX-001,1986-02,fire,1\nTX-002,1987-01,relief_response_restrictions,4\n",
    );
    let r = write(dir.path(), "r.csv", REGIONS);
    let inputs = Inputs::load(&p, &i, &r).unwrap();

    let out = dir.path().join("out");
    fs::create_dir(&out).unwrap();
    write_precip(&out.join("p.csv"), &inputs.precip).unwrap();
    write_impacts(&out.join("i.csv"), &inputs.impacts).unwrap();
    write_regions(&out.join("r.csv"), &inputs.regions).unwrap();
    let again = Inputs::load(&out.join("p.csv"), &out.join("i.csv"), &out.join("r.csv")).unwrap();
    assert_eq!(again, inputs);
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_precip(Path::new("/nonexistent/precip.csv")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("/nonexistent/precip.csv"));
}
