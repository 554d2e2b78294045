#!/usr/bin/env python3
"""Regenerates the occupancy-map fixtures under fixtures/.

Maps are written in the text-grid format (row 0 = top, `0` free, `1`
occupied, single-space separated) with a JSON sidecar holding the cell size
and the lower-left origin.
"""
import json
import pathlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def blank(rows, cols):
    return [[0] * cols for _ in range(rows)]


def fill_rect(grid, mpc, x0, x1, y0, y1, origin=(0.0, 0.0)):
    """Marks every cell whose center lies in [x0, x1] x [y0, y1] (meters)."""
    rows, cols = len(grid), len(grid[0])
    for r in range(rows):
        yc = origin[1] + (rows - 1 - r + 0.5) * mpc
        if not (y0 <= yc <= y1):
            continue
        for c in range(cols):
            xc = origin[0] + (c + 0.5) * mpc
            if x0 <= xc <= x1:
                grid[r][c] = 1


def border(grid):
    rows, cols = len(grid), len(grid[0])
    for c in range(cols):
        grid[0][c] = grid[rows - 1][c] = 1
    for r in range(rows):
        grid[r][0] = grid[r][cols - 1] = 1


def write(name, grid, mpc, origin):
    ROOT.mkdir(parents=True, exist_ok=True)
    with open(ROOT / f"{name}.txt", "w") as f:
        for row in grid:
            f.write(" ".join(str(v) for v in row) + "\n")
    with open(ROOT / f"{name}.json", "w") as f:
        json.dump({"meters_per_cell": mpc, "origin": list(origin)}, f)
        f.write("\n")


def bookstore():
    # 20 m x 20 m store. Door (goal) in the open upper-left area; shelving
    # in the middle; a serpentine stock-room pocket in the lower right.
    mpc = 0.2
    g = blank(100, 100)
    border(g)
    # central shelving rows
    for y in (6.0, 9.0, 12.0):
        fill_rect(g, mpc, 8.0, 13.0, y, y + 0.6)
    # right wall shelves
    fill_rect(g, mpc, 15.0, 15.6, 9.0, 16.0)
    # checkout counter near the middle top
    fill_rect(g, mpc, 9.0, 12.0, 15.5, 16.1)
    # stock-room pocket: top wall with a 1.2 m doorway at x in [13.4, 14.6]
    fill_rect(g, mpc, 12.4, 13.4, 7.0, 7.6)
    fill_rect(g, mpc, 14.6, 19.8, 7.0, 7.6)
    fill_rect(g, mpc, 12.4, 13.0, 0.2, 7.6)
    # serpentine shelves inside the pocket (1 m aisles)
    fill_rect(g, mpc, 14.6, 15.2, 1.2, 7.0)
    fill_rect(g, mpc, 16.2, 16.8, 0.2, 6.0)
    fill_rect(g, mpc, 17.8, 18.4, 1.2, 7.0)
    # a display table in the open area left of the shelving
    fill_rect(g, mpc, 3.0, 4.6, 5.0, 6.6)
    write("bookstore", g, mpc, (0.0, 0.0))


def living_room():
    # 12 m x 12 m room with a coffee table between the start and the goals.
    mpc = 0.2
    g = blank(60, 60)
    border(g)
    fill_rect(g, mpc, 5.2, 6.8, 5.6, 6.6)
    # couch along the top wall between the two goals
    fill_rect(g, mpc, 4.6, 7.4, 10.8, 11.8)
    write("living_room", g, mpc, (0.0, 0.0))


def intersection():
    # Four-way intersection, 1 m cells. The central 16 m box is open; each
    # arm has two 4 m lanes at offsets [2, 6] m on either side of a median.
    mpc = 1.0
    origin = (-24.0, -24.0)
    g = blank(48, 48)
    for r in range(48):
        yc = origin[1] + (47 - r + 0.5) * mpc
        for c in range(48):
            xc = origin[0] + (c + 0.5) * mpc
            if abs(xc) <= 8.0 and abs(yc) <= 8.0:
                continue
            across = abs(xc) if abs(yc) > 8.0 else abs(yc)
            if abs(xc) > 8.0 and abs(yc) > 8.0:
                g[r][c] = 1
            elif not (2.0 <= across <= 6.0):
                g[r][c] = 1
    write("intersection", g, mpc, origin)


if __name__ == "__main__":
    bookstore()
    living_room()
    intersection()
