mod common;

use wqc_core::error::Error;
use wqc_core::network::{parse_network, serialize_network, HydraulicProfile};

#[test]
fn reference_networks_have_expected_counts() {
    let three = parse_network(&common::read_data("three-node.inp")).unwrap();
    assert_eq!(three.counts().as_array(), [1, 1, 1, 1, 1, 0]);
    let net1 = parse_network(&common::read_data("net1.inp")).unwrap();
    assert_eq!(net1.counts().as_array(), [9, 1, 1, 12, 1, 0]);
}

#[test]
fn network_text_round_trips() {
    for name in ["three-node.inp", "five-node.inp", "net1.inp"] {
        let net = parse_network(&common::read_data(name)).unwrap();
        let again = parse_network(&serialize_network(&net)).unwrap();
        assert_eq!(net, again, "{name}");
    }
}

#[test]
fn hydraulics_csv_round_trips() {
    let net = parse_network(&common::read_data("three-node.inp")).unwrap();
    let hyd = HydraulicProfile::from_csv(&net, &common::read_data("three-node.csv"), 3600.0).unwrap();
    assert_eq!(hyd.len(), 24);
    assert!(hyd.is_consistent());
    let again = HydraulicProfile::from_csv(&net, &hyd.to_csv(&net), 3600.0).unwrap();
    assert_eq!(hyd.len(), again.len());
    for (a, b) in hyd.periods().iter().zip(again.periods()) {
        for (x, y) in a.flows.iter().zip(&b.flows) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        for (x, y) in a.demands.iter().zip(&b.demands) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

#[test]
fn syntax_errors_name_the_line() {
    let err = parse_network("[JUNCTIONS]\nA\n[PIPES]\nP A B ten 0.1 0 0 0\n").unwrap_err();
    assert!(matches!(err, Error::Syntax { line: 4, .. }), "{err}");
}

#[test]
fn dangling_link_is_rejected() {
    assert!(parse_network("[JUNCTIONS]\nA\n[PIPES]\nP A Z 1 0.1 0 0 0\n").is_err());
}
