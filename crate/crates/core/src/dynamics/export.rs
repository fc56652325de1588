//! Deterministic text exports of assembled systems.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra_sparse::CsrMatrix;

use super::assembly::StateSpaceSystem;
use crate::error::Result;
use crate::network::WaterNetwork;

/// `row,col,value` triplets in row-major order.
pub fn triplets_csv(m: &CsrMatrix<f64>) -> String {
    let mut s = String::from("row,col,value\n");
    for (i, row) in m.row_iter().enumerate() {
        for (c, v) in row.col_indices().iter().zip(row.values()) {
            let _ = writeln!(s, "{i},{c},{v:e}");
        }
    }
    s
}

/// Entity label to state index, as pretty JSON sorted by label.
pub fn index_map_json(sys: &StateSpaceSystem, net: &WaterNetwork) -> Result<String> {
    Ok(serde_json::to_string_pretty(&sys.map.to_map(net))? + "\n")
}

/// Write `A_<p>.csv`, `B_<p>.csv` for every period plus `index_map.json`.
pub fn write_systems(dir: &Path, systems: &[StateSpaceSystem], net: &WaterNetwork) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for sys in systems {
        std::fs::write(dir.join(format!("A_{}.csv", sys.period)), triplets_csv(&sys.a))?;
        std::fs::write(dir.join(format!("B_{}.csv", sys.period)), triplets_csv(&sys.b))?;
    }
    if let Some(first) = systems.first() {
        std::fs::write(dir.join("index_map.json"), index_map_json(first, net)?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra_sparse::CooMatrix;

    #[test]
    fn triplets_are_row_major() {
        let mut coo = CooMatrix::new(2, 2);
        coo.push(1, 0, 0.5);
        coo.push(0, 1, -2.0);
        let csr = CsrMatrix::from(&coo);
        assert_eq!(triplets_csv(&csr), "row,col,value\n0,1,-2e0\n1,0,5e-1\n");
    }
}
