// SMT-LIB 2 batch front end for the z3 WebAssembly build.
//
// Usage: node shim.js FILE.smt2
// Reads the file, evaluates it with z3, prints the solver output
// (sat/unsat lines, models, errors) to stdout and exits 0.
const fs = require('fs');
const { init } = require('z3-solver');

(async () => {
  const path = process.argv[2];
  if (!path) {
    console.error('usage: z3 FILE.smt2');
    process.exit(2);
  }
  const script = fs.readFileSync(path, 'utf8');
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  const out = await Z3.eval_smtlib2_string(ctx, script);
  process.stdout.write(out);
  process.exit(0);
})().catch((err) => {
  console.error(String(err && err.message ? err.message : err));
  process.exit(2);
});
