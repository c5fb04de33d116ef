use std::fmt;

use super::ast::*;

impl Program {
    fn write_instruction(
        &self,
        f: &mut fmt::Formatter<'_>,
        proc: &Process,
        ins: &Instruction,
    ) -> fmt::Result {
        let reg = |r: &RegId| proc.reg_name(*r).to_string();
        if ins.label.explicit {
            write!(f, "{}: ", ins.label.name)?;
        }
        match &ins.raw {
            RawInstruction::Move { dst, term } => write!(
                f,
                "move {} {}",
                proc.reg_name(*dst),
                term.display_with(&reg)
            )?,
            RawInstruction::Load { dst, var } => {
                write!(f, "load {} {}", proc.reg_name(*dst), self.var_name(*var))?
            }
            RawInstruction::Store { var, term } => write!(
                f,
                "store {} {}",
                self.var_name(*var),
                term.display_with(&reg)
            )?,
            RawInstruction::Jump { target, cond } => write!(
                f,
                "jump {} {}",
                proc.instructions[*target].label.name,
                cond.display_with(&reg)
            )?,
            RawInstruction::Nop => write!(f, "nop")?,
            RawInstruction::Assert(t) => write!(f, "assert {}", t.display_with(&reg))?,
        }
        if !ins.attributes.is_empty() {
            let attrs: Vec<&str> = ins.attributes.iter().map(String::as_str).collect();
            write!(f, " [{}]", attrs.join(", "))?;
        }
        Ok(())
    }
}

/// Prints source text that parses back to an equal program.
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.shared.is_empty() {
            writeln!(f, "shared {}", self.shared.join(", "))?;
        }
        for (p, proc) in self.processes.iter().enumerate() {
            writeln!(f, "process {p} {{")?;
            let mut open_block = None;
            for ins in &proc.instructions {
                if open_block.is_some() && ins.atomic_block != open_block {
                    writeln!(f, "  }}")?;
                    open_block = None;
                }
                if ins.atomic_block.is_some() && open_block.is_none() {
                    writeln!(f, "  atomic {{")?;
                    open_block = ins.atomic_block;
                }
                let indent = if open_block.is_some() { "    " } else { "  " };
                f.write_str(indent)?;
                self.write_instruction(f, proc, ins)?;
                writeln!(f)?;
            }
            if open_block.is_some() {
                writeln!(f, "  }}")?;
            }
            writeln!(f, "}}")?;
        }
        for fa in &self.finals {
            let name = |r: &FinalRef| self.final_ref_name(r);
            writeln!(f, "final assert {}", fa.term.display_with(&name))?;
        }
        Ok(())
    }
}
