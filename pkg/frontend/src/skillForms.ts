// The skill-library forms are sugar: they emit the exact textual command the
// REPL would take, keeping a single write path through /api/command.

function quote(value: string): string {
  return `'${value.replace(/\\/g, "\\\\").replace(/'/g, "\\'")}'`;
}

export function buildSaveCommand(name: string, n: number): string {
  return `save_last_n_tasks(${quote(name)}, ${Math.trunc(n)})`;
}

export function buildApplyCommand(name: string, substitution: [string, string][]): string {
  const pairs = substitution
    .filter(([from, to]) => from && to)
    .map(([from, to]) => `${quote(from)}: ${quote(to)}`)
    .join(", ");
  return `do_skill_from_library(${quote(name)}, {${pairs}})`;
}
