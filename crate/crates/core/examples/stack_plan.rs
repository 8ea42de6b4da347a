//! Stack plans for a 601-slice scan at the three overlap factors, then a
//! slice/reassemble round trip.

use ctstack::stacker::{plan_stacks, reassemble, slice_into_stacks, StackParams};
use ctstack::volume::Geometry;
use ctstack::ProbVolume;

fn main() -> ctstack::Result<()> {
    for factor in [0.0, 0.375, 0.625] {
        let params = StackParams::from_factor(32, factor)?;
        let plan = plan_stacks(601, params)?;
        let last = plan.entries.last().unwrap();
        println!(
            "factor {factor}: O={} stride {} -> {} stacks, last [{}, {}) pad {}",
            params.overlap,
            params.stride(),
            plan.len(),
            last.start,
            last.start + plan.stack_size(),
            last.pad
        );
    }

    let g = Geometry::new(4, 4, 601)?;
    let volume = ProbVolume::new("demo", g, (0..g.len()).map(|i| (i % 97) as f32 / 96.0).collect())?;
    let plan = plan_stacks(601, StackParams::new(32, 0)?)?;
    let slabs = slice_into_stacks(&volume, &plan)?;
    let back = reassemble(&slabs, &plan)?;
    println!("round trip through {} slabs identical: {}", slabs.len(), back.voxels() == volume.voxels());
    println!("plan.json:\n{}", serde_json::to_string_pretty(&plan_stacks(70, StackParams::new(32, 12)?)?).unwrap());
    Ok(())
}
