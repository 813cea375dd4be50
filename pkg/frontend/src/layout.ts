// Seeded force-directed layout.  The PRNG is derived from the session's
// layout seed so a replayed session renders node-for-node identically.

export interface Point {
  x: number;
  y: number;
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function forceLayout(
  nNodes: number,
  edges: [number, number][],
  seed: number,
  iterations = 150,
): Point[] {
  const rand = mulberry32(seed);
  const pos: Point[] = [];
  for (let i = 0; i < nNodes; i++) {
    pos.push({ x: rand() * 2 - 1, y: rand() * 2 - 1 });
  }
  if (nNodes <= 1) return pos;

  const area = 4;
  const k = Math.sqrt(area / nNodes); // ideal spring length
  let temperature = 0.25;
  const cool = Math.pow(0.01 / temperature, 1 / iterations);

  const disp: Point[] = pos.map(() => ({ x: 0, y: 0 }));
  for (let it = 0; it < iterations; it++) {
    for (const d of disp) {
      d.x = 0;
      d.y = 0;
    }
    // pairwise repulsion
    for (let i = 0; i < nNodes; i++) {
      for (let j = i + 1; j < nNodes; j++) {
        let dx = pos[i].x - pos[j].x;
        let dy = pos[i].y - pos[j].y;
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-9) {
          dx = (rand() - 0.5) * 1e-3;
          dy = (rand() - 0.5) * 1e-3;
          d2 = dx * dx + dy * dy;
        }
        const force = (k * k) / d2;
        disp[i].x += dx * force;
        disp[i].y += dy * force;
        disp[j].x -= dx * force;
        disp[j].y -= dy * force;
      }
    }
    // spring attraction along edges
    for (const [u, v] of edges) {
      const dx = pos[u].x - pos[v].x;
      const dy = pos[u].y - pos[v].y;
      const dist = Math.sqrt(dx * dx + dy * dy) + 1e-9;
      const force = dist / k;
      disp[u].x -= (dx / dist) * force * dist;
      disp[u].y -= (dy / dist) * force * dist;
      disp[v].x += (dx / dist) * force * dist;
      disp[v].y += (dy / dist) * force * dist;
    }
    for (let i = 0; i < nNodes; i++) {
      const d = Math.sqrt(disp[i].x ** 2 + disp[i].y ** 2) + 1e-9;
      const step = Math.min(d, temperature);
      pos[i].x += (disp[i].x / d) * step;
      pos[i].y += (disp[i].y / d) * step;
    }
    temperature *= cool;
  }

  // normalize into the unit box with a small margin
  const xs = pos.map((p) => p.x);
  const ys = pos.map((p) => p.y);
  const [minX, maxX] = [Math.min(...xs), Math.max(...xs)];
  const [minY, maxY] = [Math.min(...ys), Math.max(...ys)];
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  return pos.map((p) => ({
    x: 0.05 + 0.9 * ((p.x - minX) / spanX),
    y: 0.05 + 0.9 * ((p.y - minY) / spanY),
  }));
}
